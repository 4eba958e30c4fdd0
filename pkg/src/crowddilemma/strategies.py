"""Reactive strategies for the iterated game and the named catalog.

A reactive strategy maps the opponent's realized action in the previous
round (6 cases) to the player's next selected action (4 cases), giving
4^6 = 4096 strategies.  Strategies are indexed 0..4095 by reading the
response table in the order (CA, CN, C*, SA, SN, S*) as base-4 digits with
CA=0, CN=1, SA=2, SN=3 and the CA response most significant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .game import REALIZED_ORDER, RealizedAction, SelectedAction

STRATEGY_COUNT = 4096


@dataclass(frozen=True)
class ReactiveStrategy:
    """Total response table over the six realized opponent actions."""

    responses: tuple[SelectedAction, ...]

    def __post_init__(self) -> None:
        if len(self.responses) != 6:
            raise ValueError("a reactive strategy needs exactly 6 responses")
        object.__setattr__(
            self, "responses", tuple(SelectedAction(r) for r in self.responses)
        )

    def respond(self, opponent_realized: RealizedAction) -> SelectedAction:
        """Next selected action after observing the opponent's realized action."""
        return self.responses[_REALIZED_POS[opponent_realized]]

    @property
    def index(self) -> int:
        return encode(self)

    def to_string(self) -> str:
        """Serialize as the comma-separated 6-action string, e.g. "CA,CA,CA,CA,CA,SA"."""
        return ",".join(a.label for a in self.responses)

    @classmethod
    def from_string(cls, text: str) -> "ReactiveStrategy":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 6:
            raise ValueError(f"expected 6 comma-separated actions, got {text!r}")
        return cls(tuple(SelectedAction[p] for p in parts))

    def __iter__(self) -> Iterator[SelectedAction]:
        return iter(self.responses)

    def __str__(self) -> str:
        return self.to_string()


_REALIZED_POS = {r: i for i, r in enumerate(REALIZED_ORDER)}


def encode(strategy: ReactiveStrategy) -> int:
    """Base-4 index of a response table; inverse of decode."""
    idx = 0
    for action in strategy.responses:
        idx = idx * 4 + action.value
    return idx


def decode(index: int) -> ReactiveStrategy:
    """Response table for an index in [0, 4095]."""
    if not 0 <= index < STRATEGY_COUNT:
        raise ValueError(f"strategy index out of range: {index}")
    digits = []
    for pos in range(5, -1, -1):
        digits.append(SelectedAction((index >> (2 * pos)) & 3))
    return ReactiveStrategy(tuple(digits))


def response_digits(index: int) -> tuple[int, ...]:
    """The six base-4 digits of an index, most significant (CA response) first."""
    if not 0 <= index < STRATEGY_COUNT:
        raise ValueError(f"strategy index out of range: {index}")
    return tuple((index >> (2 * pos)) & 3 for pos in range(5, -1, -1))


@dataclass(frozen=True)
class CatalogEntry:
    """A named strategy with the closed-form regions where it is stable/efficient."""

    number: int
    name: str
    strategy: ReactiveStrategy
    ess_region: str
    efficiency_region: Optional[str]

    @property
    def index(self) -> int:
        return self.strategy.index


def _entry(number: int, name: str, actions: str, ess: str, eff: Optional[str]) -> CatalogEntry:
    return CatalogEntry(number, name, ReactiveStrategy.from_string(actions), ess, eff)


#: The 16 strategies that are evolutionarily stable somewhere in the (d,q) square.
CATALOG: tuple[CatalogEntry, ...] = (
    _entry(1, "uncond-CA", "CA,CA,CA,CA,CA,CA", "A", None),
    _entry(2, "uncond-CN", "CN,CN,CN,CN,CN,CN", "B", "B"),
    _entry(3, "uncond-SA", "SA,SA,SA,SA,SA,SA", "C", "C"),
    _entry(4, "strategy-4", "CN,CN,CN,CN,CN,SA", "D", "D"),
    _entry(5, "strategy-5", "CN,CN,SA,SA,SA,CN", "D", "D"),
    _entry(6, "strategy-6", "CN,CN,SA,SA,SA,SA", "D", "D"),
    _entry(7, "strategy-7", "SA,SA,CN,CN,CN,CN", "D", "D"),
    _entry(8, "strategy-8", "SA,SA,CN,CN,CN,SA", "D", "D"),
    _entry(9, "strategy-9", "SA,SA,SA,SA,SA,CN", "D", "D"),
    _entry(10, "strategy-10", "CN,SA,SA,SA,SA,SA", "D", None),
    _entry(11, "strategy-11", "CN,SA,CN,CN,CN,SA", "E", None),
    _entry(12, "strategy-12", "CA,CA,CA,CA,CA,SA", "F", "K"),
    _entry(13, "strategy-13", "SA,SA,CA,CA,CA,CA", "G", None),
    _entry(14, "strategy-14", "SA,SA,CA,CA,CA,SA", "H", "L"),
    _entry(15, "strategy-15", "SN,CA,CA,CA,CA,SN", "I", None),
    _entry(16, "strategy-16", "SN,CN,CA,CA,CA,SN", "J", None),
)

CATALOG_BY_NUMBER: dict[int, CatalogEntry] = {e.number: e for e in CATALOG}
CATALOG_BY_INDEX: dict[int, CatalogEntry] = {e.index: e for e in CATALOG}


def catalog_index(number: int) -> int:
    """Strategy index of catalog entry `number` (1..16)."""
    return CATALOG_BY_NUMBER[number].index
