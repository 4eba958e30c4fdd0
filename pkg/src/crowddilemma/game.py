"""Core definitions of the iterated crowdsourcing dilemma.

Two firms repeatedly choose whether to crowdsource a task and whether to
attack the opponent's crowdsourced solution.  An attack only executes when
the opponent actually crowdsources, so what a player *realizes* in a round
can hide its attack intent.  This module defines the selected and realized
actions, the nine realizable action pairs, the exact per-round payoffs, the
per-decision error model, and a Monte Carlo oracle for the payoff table.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Mapping, Union

import numpy as np

RationalLike = Union[Fraction, int, str]


def as_fraction(value: RationalLike | float) -> Fraction:
    """Coerce to an exact Fraction ("3/5", "0.3", ints, floats accepted)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(str(value)) if isinstance(value, str) else Fraction(value)


class SelectedAction(IntEnum):
    """One of the four intendable actions: crowdsource/solo x attack/no-attack."""

    CA = 0
    CN = 1
    SA = 2
    SN = 3

    @property
    def crowdsources(self) -> bool:
        return self in (SelectedAction.CA, SelectedAction.CN)

    @property
    def attacks(self) -> bool:
        return self in (SelectedAction.CA, SelectedAction.SA)

    @property
    def label(self) -> str:
        return self.name


class RealizedAction(IntEnum):
    """One of the six observable outcomes of a round for a single player.

    C*/S* occur when the opponent did not crowdsource: the attack decision
    never triggered, so the opponent cannot tell A from N.
    """

    CA = 0
    CN = 1
    C_STAR = 2
    SA = 3
    SN = 4
    S_STAR = 5

    @property
    def label(self) -> str:
        return {2: "C*", 5: "S*"}.get(self.value, self.name)

    @property
    def attacked(self) -> bool:
        """True when this player executed an attack this round."""
        return self in (RealizedAction.CA, RealizedAction.SA)


# Realized-action order used everywhere a response table is written out.
REALIZED_ORDER: tuple[RealizedAction, ...] = (
    RealizedAction.CA,
    RealizedAction.CN,
    RealizedAction.C_STAR,
    RealizedAction.SA,
    RealizedAction.SN,
    RealizedAction.S_STAR,
)


class ChainState(IntEnum):
    """One of the nine realizable pairs of realized actions (player 1, player 2)."""

    CA_CA = 0
    CA_CN = 1
    CN_CA = 2
    CN_CN = 3
    CSTAR_SA = 4
    CSTAR_SN = 5
    SA_CSTAR = 6
    SN_CSTAR = 7
    SSTAR_SSTAR = 8

    @property
    def pair(self) -> tuple[RealizedAction, RealizedAction]:
        return _STATE_PAIRS[self.value]

    @property
    def realized1(self) -> RealizedAction:
        return _STATE_PAIRS[self.value][0]

    @property
    def realized2(self) -> RealizedAction:
        return _STATE_PAIRS[self.value][1]

    @property
    def label(self) -> str:
        a, b = self.pair
        return f"({a.label},{b.label})"


_STATE_PAIRS: tuple[tuple[RealizedAction, RealizedAction], ...] = (
    (RealizedAction.CA, RealizedAction.CA),
    (RealizedAction.CA, RealizedAction.CN),
    (RealizedAction.CN, RealizedAction.CA),
    (RealizedAction.CN, RealizedAction.CN),
    (RealizedAction.C_STAR, RealizedAction.SA),
    (RealizedAction.C_STAR, RealizedAction.SN),
    (RealizedAction.SA, RealizedAction.C_STAR),
    (RealizedAction.SN, RealizedAction.C_STAR),
    (RealizedAction.S_STAR, RealizedAction.S_STAR),
)

CHAIN_STATES: tuple[ChainState, ...] = tuple(ChainState)

#: Role swap: state seen from player 2's perspective.
MIRROR: tuple[ChainState, ...] = (
    ChainState.CA_CA,
    ChainState.CN_CA,
    ChainState.CA_CN,
    ChainState.CN_CN,
    ChainState.SA_CSTAR,
    ChainState.SN_CSTAR,
    ChainState.CSTAR_SA,
    ChainState.CSTAR_SN,
    ChainState.SSTAR_SSTAR,
)


@dataclass(frozen=True)
class Params:
    """Game parameters.

    d: damage an executed attack inflicts on the victim's productivity.
    q: cost the attacker pays per executed attack.
    epsilon: per-decision error probability (each of the two decision bits
        flips independently with this probability every round).

    d and q must be exact rationals for the exact-arithmetic paths; epsilon
    may be a float (numeric paths) or a Fraction.  epsilon == 0 is allowed
    only on float paths; the exact machinery treats epsilon symbolically.
    """

    d: Fraction
    q: Fraction
    epsilon: Union[Fraction, float] = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "d", as_fraction(self.d))
        object.__setattr__(self, "q", as_fraction(self.q))
        if not (0 < self.d < 1):
            raise ValueError(f"d must lie in (0,1), got {self.d}")
        if not (0 < self.q < 1):
            raise ValueError(f"q must lie in (0,1), got {self.q}")
        if not (0 <= float(self.epsilon) < 0.5):
            raise ValueError(f"epsilon must lie in [0, 1/2), got {self.epsilon}")


def mirror(state: ChainState) -> ChainState:
    """Swap player roles, e.g. (C*,SA) <-> (SA,C*)."""
    return MIRROR[state]


def realize(a1: SelectedAction, a2: SelectedAction) -> ChainState:
    """Map the pair of selected actions to the realized pair.

    Attacks execute only against a crowdsourcing opponent; a player whose
    attack decision never triggered realizes C* or S*.
    """
    c1, c2 = a1.crowdsources, a2.crowdsources
    if c1 and c2:
        # Both attack decisions triggered and are observable.
        return _BOTH_CROWD[(a1, a2)]
    if c1 and not c2:
        return ChainState.CSTAR_SA if a2.attacks else ChainState.CSTAR_SN
    if c2 and not c1:
        return ChainState.SA_CSTAR if a1.attacks else ChainState.SN_CSTAR
    return ChainState.SSTAR_SSTAR


_BOTH_CROWD: dict[tuple[SelectedAction, SelectedAction], ChainState] = {
    (SelectedAction.CA, SelectedAction.CA): ChainState.CA_CA,
    (SelectedAction.CA, SelectedAction.CN): ChainState.CA_CN,
    (SelectedAction.CN, SelectedAction.CA): ChainState.CN_CA,
    (SelectedAction.CN, SelectedAction.CN): ChainState.CN_CN,
}


def stage_payoff(state: ChainState, params: Params) -> Fraction:
    """Exact expected per-round payoff of player 1 in the given realized pair.

    Productivities are uniform on (0,1) for crowdsourcers and 0 otherwise;
    an executed attack lowers the victim's productivity by d and costs the
    attacker q; the higher final productivity wins the unit payoff, ties
    split it evenly.
    """
    d, q = params.d, params.q
    half = Fraction(1, 2)
    table = {
        ChainState.CA_CA: half - q,
        ChainState.CA_CN: 1 - half * (1 - d) ** 2 - q,
        ChainState.CN_CA: half * (1 - d) ** 2,
        ChainState.CN_CN: half,
        ChainState.CSTAR_SA: 1 - d,
        ChainState.CSTAR_SN: Fraction(1),
        ChainState.SA_CSTAR: d - q,
        ChainState.SN_CSTAR: Fraction(0),
        ChainState.SSTAR_SSTAR: half,
    }
    return table[state]


def payoff_vector(params: Params) -> list[Fraction]:
    """Player-1 stage payoffs for all nine states in canonical order."""
    return [stage_payoff(s, params) for s in CHAIN_STATES]


def realized_attackers(state: ChainState) -> int:
    """Number of players whose attack executed in this state (0, 1 or 2)."""
    return int(state.realized1.attacked) + int(state.realized2.attacked)


def error_distribution(
    intended: SelectedAction, epsilon: Union[Fraction, float]
) -> Mapping[SelectedAction, Union[Fraction, float]]:
    """Distribution of the actually selected action given the intended one.

    The crowdsourcing bit and the attack bit each flip independently with
    probability epsilon, so an action at Hamming distance h from the intent
    occurs with probability epsilon^h * (1-epsilon)^(2-h).
    """
    if not (0 <= float(epsilon) < 0.5):
        raise ValueError(f"epsilon must lie in [0, 1/2), got {epsilon}")
    one = Fraction(1) if isinstance(epsilon, Fraction) else 1.0
    out = {}
    for actual in SelectedAction:
        h = int(intended.crowdsources != actual.crowdsources) + int(
            intended.attacks != actual.attacks
        )
        out[actual] = epsilon**h * (one - epsilon) ** (2 - h)
    return out


def stage_payoff_oracle(
    state: ChainState, params: Params, samples: int, seed: int
) -> float:
    """Monte Carlo estimate of stage_payoff, independent of the closed form.

    Draws productivities directly and applies the win/tie/cost rules.
    Deterministic for a fixed seed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    d, q = float(params.d), float(params.q)
    r1, r2 = state.realized1, state.realized2

    def productivity(own: RealizedAction, other: RealizedAction) -> np.ndarray:
        crowd = own in (RealizedAction.CA, RealizedAction.CN, RealizedAction.C_STAR)
        p = rng.uniform(0.0, 1.0, samples) if crowd else np.zeros(samples)
        if other.attacked:
            p = p - d
        return p

    p1 = productivity(r1, r2)
    p2 = productivity(r2, r1)
    wins = np.where(p1 > p2, 1.0, np.where(p1 == p2, 0.5, 0.0))
    return float(np.mean(wins) - (q if r1.attacked else 0.0))
