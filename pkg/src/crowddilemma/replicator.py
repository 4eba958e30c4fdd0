"""Replicator dynamics over a chosen set of ESSs and basin-of-attraction sizes.

The replicator equation dx_n/dt = x_n (pi_n - pibar) is integrated over the
simplex spanned by the included strategies, with the payoff matrix taken
from the iterated game at a fixed numeric eps (1e-3 by default).

Payoff gaps between coexisting ESSs can be as small as O(q * eps), so the
raw flow crosses many orders of magnitude in speed.  Integration therefore
uses the speed-normalized field RHS/|RHS|_inf, which has exactly the same
orbits (hence the same basins) but uniformly bounded absorption times, with
a classical fixed-step fourth-order scheme on top.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .game import Params, as_fraction
from .markov import batch_float_payoffs

DEFAULT_EPS = 1e-3
STEP = 0.1
ABSORB_THRESHOLD = 1.0 - 1e-6
MAX_STEPS = 10**6
GRID_STEPS = 200  # basin grid resolution Delta = 1/200


class BasinError(ValueError):
    """Raised when a basin computation's preconditions fail (non-bistable
    pair, non-ESS vertex, or a degenerate denominator)."""


def payoff_matrix(strategies: Sequence[int], d, q, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Pairwise average payoffs Pi[i][j] = pi(strategies[i], strategies[j])."""
    d, q = as_fraction(d), as_fraction(q)
    params = Params(d, q, eps)
    idx = np.asarray(strategies, dtype=np.int64)
    out = np.empty((len(idx), len(idx)))
    for i, n in enumerate(idx):
        pi_nm, _, res = batch_float_payoffs(int(n), idx, eps, params)
        if np.any(res > 1e-8):
            raise BasinError("stationary solve failed while building the payoff matrix")
        out[i] = pi_nm
    return out


def replicator_rhs(x: np.ndarray, payoffs: np.ndarray) -> np.ndarray:
    """Right-hand side of the replicator equation; components sum to zero."""
    x = np.asarray(x, dtype=float)
    fitness = payoffs @ x
    mean = float(x @ fitness)
    return x * (fitness - mean)


def _normalized_rhs(x: np.ndarray, payoffs: np.ndarray) -> np.ndarray:
    v = replicator_rhs(np.clip(x, 0.0, None), payoffs)
    speed = np.max(np.abs(v))
    if speed < 1e-30:
        return np.zeros_like(v)
    return v / speed


def integrate_to_absorption(
    x0: Sequence[float],
    payoffs: np.ndarray,
    step: float = STEP,
    threshold: float = ABSORB_THRESHOLD,
    max_steps: int = MAX_STEPS,
) -> tuple[Optional[int], int]:
    """Integrate the (speed-normalized) replicator flow until one strategy's
    share reaches the threshold.

    Returns (winner index, steps taken); winner is None when the trajectory
    is still undecided after max_steps (e.g. it started on a separatrix).
    """
    x = np.asarray(x0, dtype=float)
    if x.min() < 0 or abs(x.sum() - 1.0) > 1e-9:
        raise ValueError("initial condition must lie on the simplex")
    for n_steps in range(max_steps):
        top = int(np.argmax(x))
        if x[top] >= threshold:
            return top, n_steps
        k1 = _normalized_rhs(x, payoffs)
        k2 = _normalized_rhs(x + 0.5 * step * k1, payoffs)
        k3 = _normalized_rhs(x + 0.5 * step * k2, payoffs)
        k4 = _normalized_rhs(x + step * k3, payoffs)
        x = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x = np.clip(x, 0.0, None)
        x = x / x.sum()
    top = int(np.argmax(x))
    if x[top] >= threshold:
        return top, max_steps
    return None, max_steps


def _require_mutually_stable(strategies: Sequence[int], payoffs: np.ndarray) -> None:
    for i in range(len(strategies)):
        for j in range(len(strategies)):
            if i != j and payoffs[i, i] <= payoffs[j, i]:
                raise BasinError(
                    f"strategy {strategies[i]} is not stable against "
                    f"{strategies[j]} at this point; basin computation needs "
                    "a set of coexisting ESSs"
                )


def basin_two(n1: int, n2: int, d, q, eps: float = DEFAULT_EPS) -> float:
    """Relative basin size of n1 under two-strategy replicator dynamics.

    Uses the closed form (pi_11 - pi_21) / (pi_11 + pi_22 - pi_12 - pi_21)
    on float payoffs at the given eps.  Requires a bistable pair."""
    payoffs = payoff_matrix([n1, n2], d, q, eps)
    _require_mutually_stable([n1, n2], payoffs)
    den = payoffs[0, 0] + payoffs[1, 1] - payoffs[0, 1] - payoffs[1, 0]
    if den <= 0:
        raise BasinError(f"non-bistable pair: denominator {den:.3e} is not positive")
    share = (payoffs[0, 0] - payoffs[1, 0]) / den
    if not 0 < share < 1:
        raise BasinError(f"basin share {share:.3e} outside (0,1); pair is not bistable")
    return float(share)


@dataclass(frozen=True)
class BasinResult:
    """Basin shares measured from the dense grid of initial conditions."""

    strategies: tuple[int, ...]
    d: Fraction
    q: Fraction
    eps: float
    delta: Fraction
    counts: tuple[int, ...]
    unresolved: int

    @property
    def total(self) -> int:
        return sum(self.counts) + self.unresolved

    @property
    def shares(self) -> tuple[float, ...]:
        return tuple(c / self.total for c in self.counts)

    @property
    def unresolved_fraction(self) -> float:
        return self.unresolved / self.total


def basin_three(
    strategies: Sequence[int],
    d,
    q,
    eps: float = DEFAULT_EPS,
    grid_steps: int = GRID_STEPS,
    step: float = STEP,
    threshold: float = ABSORB_THRESHOLD,
    max_steps: int = MAX_STEPS,
    require_stable: bool = True,
) -> BasinResult:
    """Basin shares of three coexisting ESSs from every interior grid start.

    Initial conditions are (l1, l2, l3)/grid_steps over all positive integer
    compositions of grid_steps (19701 points for the default 200).  All
    trajectories are integrated with the same deterministic scheme; the ones
    that never absorb are reported as unresolved, never assigned.

    `require_stable=False` skips the mutual-stability precondition, e.g. to
    measure the trivial basin of a strictly dominating strategy.
    """
    if len(strategies) != 3:
        raise BasinError("basin_three needs exactly 3 strategies")
    d, q = as_fraction(d), as_fraction(q)
    payoffs = payoff_matrix(strategies, d, q, eps)
    if require_stable:
        _require_mutually_stable(strategies, payoffs)

    starts = [
        (l1, l2, grid_steps - l1 - l2)
        for l1 in range(1, grid_steps)
        for l2 in range(1, grid_steps - l1)
    ]
    x = np.array(starts, dtype=float) / grid_steps
    winner = np.full(len(x), -1, dtype=np.int64)
    active = np.arange(len(x))

    for _ in range(max_steps):
        if len(active) == 0:
            break
        xa = x[active]
        top = xa.argmax(axis=1)
        absorbed = xa[np.arange(len(xa)), top] >= threshold
        if absorbed.any():
            winner[active[absorbed]] = top[absorbed]
            keep = ~absorbed
            active = active[keep]
            xa = xa[keep]
            if len(active) == 0:
                break

        def rhs(z: np.ndarray) -> np.ndarray:
            z = np.clip(z, 0.0, None)
            fit = z @ payoffs.T
            mean = (z * fit).sum(axis=1, keepdims=True)
            v = z * (fit - mean)
            speed = np.max(np.abs(v), axis=1, keepdims=True)
            return np.where(speed > 1e-30, v / np.where(speed == 0.0, 1.0, speed), 0.0)

        k1 = rhs(xa)
        k2 = rhs(xa + 0.5 * step * k1)
        k3 = rhs(xa + 0.5 * step * k2)
        k4 = rhs(xa + step * k3)
        xa = np.clip(xa + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0, None)
        xa = xa / xa.sum(axis=1, keepdims=True)
        x[active] = xa

    if len(active):
        xa = x[active]
        top = xa.argmax(axis=1)
        absorbed = xa[np.arange(len(xa)), top] >= threshold
        winner[active[absorbed]] = top[absorbed]

    counts = tuple(int((winner == i).sum()) for i in range(3))
    return BasinResult(
        strategies=tuple(int(s) for s in strategies),
        d=d, q=q, eps=eps, delta=Fraction(1, grid_steps),
        counts=counts, unresolved=int((winner < 0).sum()),
    )


def region_basin_shares(d, q, eps: float = DEFAULT_EPS) -> tuple[dict[int, float], float]:
    """Basin shares at a region-(A) point with the ESS set chosen by subregion.

    (K) pits uncond-CA against strategy 12, (L2) against strategy 14, and
    (L1) runs the three-strategy grid.  Strategies that are not ESSs at the
    point get share exactly 0.  Returns ({strategy index: share}, unresolved
    fraction); points outside region (A) are rejected.
    """
    from .ess import region_labels
    from .strategies import catalog_index

    d, q = as_fraction(d), as_fraction(q)
    info = region_labels(d, q)
    if "A" not in info.labels:
        raise BasinError(f"({d}, {q}) is outside region (A); no conditional ESS coexists here")
    ca, s12, s14 = catalog_index(1), catalog_index(12), catalog_index(14)
    shares: dict[int, float] = {ca: 0.0, s12: 0.0, s14: 0.0}
    unresolved = 0.0
    if "L1" in info.labels:
        result = basin_three([ca, s12, s14], d, q, eps)
        for idx, share in zip(result.strategies, result.shares):
            shares[idx] = share
        unresolved = result.unresolved_fraction
    elif "K" in info.labels:
        shares[s12] = basin_two(s12, ca, d, q, eps)
        shares[ca] = 1.0 - shares[s12]
    elif "L2" in info.labels:
        shares[s14] = basin_two(s14, ca, d, q, eps)
        shares[ca] = 1.0 - shares[s14]
    else:
        raise BasinError(f"({d}, {q}) lies on a subregion boundary inside (A)")
    return shares, unresolved
