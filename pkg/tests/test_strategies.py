import pytest
from hypothesis import given, strategies as st

from crowddilemma.game import Params, RealizedAction, SelectedAction
from crowddilemma.markov import build_transition
from crowddilemma.strategies import (
    CATALOG,
    CATALOG_BY_NUMBER,
    ReactiveStrategy,
    catalog_index,
    decode,
    encode,
)


def test_known_encodings():
    assert catalog_index(1) == 0        # all-CA table
    assert catalog_index(12) == 2       # CA,CA,CA,CA,CA,SA
    assert catalog_index(3) == 2730     # all-SA table
    all_sn = ReactiveStrategy.from_string("SN,SN,SN,SN,SN,SN")
    assert all_sn.index == 4095


@given(st.integers(min_value=0, max_value=4095))
def test_encode_decode_roundtrip(index):
    assert encode(decode(index)) == index


def test_decode_range_check():
    with pytest.raises(ValueError):
        decode(4096)
    with pytest.raises(ValueError):
        decode(-1)


def test_respond_examples():
    s14 = CATALOG_BY_NUMBER[14].strategy
    assert s14.respond(RealizedAction.CA) == SelectedAction.SA
    assert s14.respond(RealizedAction.S_STAR) == SelectedAction.SA
    assert s14.respond(RealizedAction.C_STAR) == SelectedAction.CA
    uncond_cn = CATALOG_BY_NUMBER[2].strategy
    for realized in RealizedAction:
        assert uncond_cn.respond(realized) == SelectedAction.CN


def test_unconditional_catalog_entries_are_constant():
    for number in (1, 2, 3):
        entry = CATALOG_BY_NUMBER[number]
        assert len(set(entry.strategy.responses)) == 1


def test_serialization_roundtrip():
    for entry in CATALOG:
        text = entry.strategy.to_string()
        assert ReactiveStrategy.from_string(text) == entry.strategy
    assert CATALOG_BY_NUMBER[12].strategy.to_string() == "CA,CA,CA,CA,CA,SA"
    with pytest.raises(ValueError):
        ReactiveStrategy.from_string("CA,CA")
    with pytest.raises(KeyError):
        ReactiveStrategy.from_string("CA,CA,CA,CA,CA,XX")


def test_catalog_regions():
    regions = {e.number: e.ess_region for e in CATALOG}
    assert regions[1] == "A" and regions[12] == "F" and regions[16] == "J"
    efficiency = {e.number: e.efficiency_region for e in CATALOG}
    assert efficiency[1] is None and efficiency[12] == "K" and efficiency[14] == "L"
    assert len(CATALOG) == 16 and len({e.index for e in CATALOG}) == 16


def test_all_tables_distinct_and_reachable():
    # distinct response tables, and every realized action of the opponent is
    # reachable under noise: one transition step already gives every state
    # positive probability
    assert len({decode(i).responses for i in range(4096)}) == 4096
    T = build_transition(1234, 271, "float", Params("1/3", "1/4", 0.01))
    assert (T > 0).all()
