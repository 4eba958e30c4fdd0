"""Average payoffs of strategy pairs via the nine-state chain of realized pairs.

For an ordered pair of reactive strategies (n, m), the realized action pair
follows a Markov chain: each player's next intended action is its response
to the opponent's last realized action, both intents pass independently
through the error channel, and the selected pair realizes deterministically.
The average payoff is the stationary expectation of the stage payoff.

Two modes are provided.  Exact mode treats eps symbolically: transition
entries are integer-coefficient polynomials in eps and the stationary
distribution is a vector of exact rational functions.  Float mode fixes eps
numerically and solves the 9x9 linear system directly.

The exact solve exploits that all states sharing the same pair of intended
responses have identical transition rows, so the chain lumps onto at most
nine distinct rows; the lumped stationary vector expands exactly to the
full one.  Lumped solutions depend only on (n, m), never on (d, q), so they
are cached per pair and reused across parameter points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Literal, Sequence, Union

import numpy as np

from .game import (
    CHAIN_STATES,
    MIRROR,
    ChainState,
    Params,
    SelectedAction,
    payoff_vector,
    realize,
)
from .ratpoly import (
    EpsPoly,
    EpsRatFunc,
    _add,
    _bareiss_solve,
    _lowest,
    _mul,
    _scale,
    _sub,
    taylor_ratio,
)
from .strategies import STRATEGY_COUNT, response_digits

Mode = Literal["exact", "float"]


class StationarySolveError(RuntimeError):
    """The float stationary solve failed its residual check."""


# Error-channel weights as integer polynomials in eps, by Hamming distance:
# (1-eps)^2, eps(1-eps), eps^2.
_ERR_WEIGHT: tuple[tuple[int, ...], ...] = ((1, -2, 1), (0, 1, -1), (0, 0, 1))

_T1 = [s.realized1.value for s in CHAIN_STATES]  # player 1's realized action per state
_T2 = [s.realized2.value for s in CHAIN_STATES]
_MIRROR_IDX = [MIRROR[s].value for s in CHAIN_STATES]


def _err_poly(intended: int, actual: int) -> tuple[int, ...]:
    a, b = SelectedAction(intended), SelectedAction(actual)
    h = int(a.crowdsources != b.crowdsources) + int(a.attacks != b.attacks)
    return _ERR_WEIGHT[h]


def _build_row_table() -> list[list[list[int]]]:
    """ROW[4*a1+a2][s'] = probability polynomial of landing in state s' when
    the intended selections are (a1, a2)."""
    table: list[list[list[int]]] = []
    for a1 in range(4):
        for a2 in range(4):
            row: list[list[int]] = [[] for _ in range(9)]
            for b1 in range(4):
                p1 = _err_poly(a1, b1)
                for b2 in range(4):
                    target = realize(SelectedAction(b1), SelectedAction(b2)).value
                    row[target] = _add(row[target], _mul(p1, _err_poly(a2, b2)))
            table.append(row)
    return table


_ROW16: list[list[list[int]]] = _build_row_table()


@lru_cache(maxsize=64)
def _row16_float(eps: float) -> np.ndarray:
    out = np.empty((16, 9))
    for code in range(16):
        for s in range(9):
            out[code, s] = float(np.polyval(list(reversed(_ROW16[code][s])) or [0], eps))
    return out


@lru_cache(maxsize=1)
def _response_matrix() -> np.ndarray:
    return np.array([response_digits(i) for i in range(STRATEGY_COUNT)], dtype=np.int64)


def _pair_codes(n: int, m: int) -> list[int]:
    """Intended-selection code 4*a1+a2 for each of the nine states."""
    rn, rm = response_digits(n), response_digits(m)
    return [rn[_T2[s]] * 4 + rm[_T1[s]] for s in range(9)]


# ---------------------------------------------------------------------------
# exact path

def _lumped_solve_raw(n: int, m: int) -> tuple[tuple[int, ...], list[list[int]], list[int]]:
    """Solve the lumped stationary system for pair (n, m).

    Returns (codes, numerators, denominator): `codes` are the distinct
    intended-selection codes; the aggregated stationary mass on code c is
    numerators[i]/denominator for codes[i] == c.
    """
    codes9 = _pair_codes(n, m)
    codes = tuple(sorted(set(codes9)))
    k = len(codes)
    pos = {c: i for i, c in enumerate(codes)}
    lumped: list[list[list[int]]] = [[[] for _ in range(k)] for _ in range(k)]
    for ia, ca in enumerate(codes):
        row = _ROW16[ca]
        for s in range(9):
            ib = pos[codes9[s]]
            lumped[ia][ib] = _add(lumped[ia][ib], row[s])
    aug: list[list[list[int]]] = []
    for j in range(k - 1):
        row = [list(lumped[i][j]) for i in range(k)]
        row[j] = _sub(row[j], [1])
        row.append([])
        aug.append(row)
    aug.append([[1] for _ in range(k + 1)])
    nums, den = _bareiss_solve(aug)
    lo = _lowest(den)
    if lo[1] < 0:
        nums = [[-c for c in p] for p in nums]
        den = [-c for c in den]
    return codes, nums, den


@lru_cache(maxsize=2048)
def _lumped_solve(n: int, m: int):
    codes, nums, den = _lumped_solve_raw(n, m)
    return codes, tuple(tuple(p) for p in nums), tuple(den)


def _expand_state_numerators(n: int, m: int) -> tuple[list[list[int]], list[int]]:
    """Numerator polynomials of the full nine-state stationary vector."""
    codes, nums, den = _lumped_solve(n, m)
    codes9 = _pair_codes(n, m)
    state_nums: list[list[int]] = []
    for s in range(9):
        acc: list[int] = []
        for i, c in enumerate(codes):
            row_entry = _ROW16[c][s]
            if row_entry:
                acc = _add(acc, _mul(list(nums[i]), row_entry))
        state_nums.append(acc)
    return state_nums, list(den)


def _int_payoffs(params: Params) -> tuple[list[int], list[int], int]:
    """Stage payoffs for both players scaled to integers by a common factor."""
    pay1 = payoff_vector(params)
    scale = lcm(*[p.denominator for p in pay1])
    ip1 = [int(p * scale) for p in pay1]
    ip2 = [ip1[_MIRROR_IDX[s]] for s in range(9)]
    return ip1, ip2, scale


def _payoff_numerators(n: int, m: int, ip1: Sequence[int], ip2: Sequence[int],
                       want_first: bool = True, want_second: bool = True):
    """Integer numerator polynomials of (scale * pi_nm, scale * pi_mn) over the
    common denominator of the (n, m) chain solve.  Either side can be skipped
    when the caller only needs one direction."""
    codes, nums, den = _lumped_solve(n, m)
    num1: list[int] = []
    num2: list[int] = []
    for i, c in enumerate(codes):
        row = _ROW16[c]
        poly = list(nums[i])
        if want_first:
            r1: list[int] = []
            for s in range(9):
                if row[s] and ip1[s]:
                    r1 = _add(r1, _scale(row[s], ip1[s]))
            num1 = _add(num1, _mul(poly, r1))
        if want_second:
            r2: list[int] = []
            for s in range(9):
                if row[s] and ip2[s]:
                    r2 = _add(r2, _scale(row[s], ip2[s]))
            num2 = _add(num2, _mul(poly, r2))
    return num1, num2, list(den)


# ---------------------------------------------------------------------------
# float path

def _float_transition(n: int, m: int, eps: float) -> np.ndarray:
    rows = _row16_float(eps)
    return rows[np.array(_pair_codes(n, m))]


def _stationary_float_residuals(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Direct dense solve of x^T T = x^T with normalization, plus one step of
    iterative refinement.  Returns (x, residuals) without judging them."""
    single = T.ndim == 2
    if single:
        T = T[None, :, :]
    B, k, _ = T.shape
    A = np.transpose(T, (0, 2, 1)) - np.eye(k)[None, :, :]
    A[:, k - 1, :] = 1.0
    b = np.zeros((B, k, 1))
    b[:, k - 1, 0] = 1.0
    x = np.linalg.solve(A, b)
    x = x + np.linalg.solve(A, b - A @ x)
    x = x[:, :, 0]
    res = np.abs(np.einsum("bi,bij->bj", x, T) - x).max(axis=1)
    res = np.maximum(res, np.abs(x.sum(axis=1) - 1.0))
    if single:
        return x[0], res[0]
    return x, res


def _solve_stationary_float(T: np.ndarray, residual_tol: float = 1e-8) -> np.ndarray:
    x, res = _stationary_float_residuals(T)
    if np.any(res > residual_tol):
        raise StationarySolveError(
            f"stationary residual {np.max(res):.3e} exceeds {residual_tol:.0e}"
        )
    return x


def batch_float_payoffs(
    n: int, invaders: np.ndarray, eps: float, params: Params
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Payoffs (pi_n_m, pi_m_n) against every invader m, from one batched solve
    of the (n, m) chains at numeric eps.  Also returns per-pair residuals so
    callers can mark unreliable solves undecided instead of failing."""
    resp = _response_matrix()
    rows = _row16_float(eps)
    t1 = np.array(_T1)
    t2 = np.array(_T2)
    a1 = resp[n][t2]
    a2 = resp[invaders][:, t1]
    T = rows[a1[None, :] * 4 + a2]
    x, res = _stationary_float_residuals(T)
    pay1 = np.array([float(p) for p in payoff_vector(params)])
    pay2 = pay1[np.array(_MIRROR_IDX)]
    return x @ pay1, x @ pay2, res


def batch_self_payoffs(candidates: np.ndarray, eps: float, params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Homogeneous payoffs pi_nn for an array of strategies at numeric eps."""
    resp = _response_matrix()
    rows = _row16_float(eps)
    t1 = np.array(_T1)
    t2 = np.array(_T2)
    a1 = resp[candidates][:, t2]
    a2 = resp[candidates][:, t1]
    T = rows[a1 * 4 + a2]
    x, res = _stationary_float_residuals(T)
    pay1 = np.array([float(p) for p in payoff_vector(params)])
    return x @ pay1, res


# ---------------------------------------------------------------------------
# public operations

@dataclass(frozen=True)
class PayoffResult:
    """Average payoff of strategy n against strategy m."""

    n: int
    m: int
    params: Params
    mode: Mode
    value: Union[EpsRatFunc, float]


def build_transition(
    n: int, m: int, mode: Mode, params: Params
) -> Union[list[list[EpsPoly]], np.ndarray]:
    """Transition matrix of the realized-pair chain for ordered pair (n, m).

    Rows and columns follow the canonical ChainState order.  Exact mode
    returns polynomial entries in eps; float mode evaluates at params.epsilon.
    """
    _check_indices(n, m)
    if mode == "exact":
        codes9 = _pair_codes(n, m)
        return [[EpsPoly(_ROW16[c][s]) for s in range(9)] for c in codes9]
    return _float_transition(n, m, float(params.epsilon))


def stationary(
    n: int, m: int, mode: Mode, params: Params
) -> Union[list[EpsRatFunc], np.ndarray]:
    """Stationary distribution over the nine realized pairs."""
    _check_indices(n, m)
    if mode == "exact":
        state_nums, den = _expand_state_numerators(n, m)
        den_poly = EpsPoly(den)
        return [EpsRatFunc(EpsPoly(p), den_poly) for p in state_nums]
    eps = float(params.epsilon)
    return _solve_stationary_float(_float_transition(n, m, eps))


def average_payoff(n: int, m: int, mode: Mode, params: Params) -> PayoffResult:
    """Average per-round payoff of player 1 (strategy n) against strategy m."""
    _check_indices(n, m)
    if mode == "exact":
        ip1, _, scale = _int_payoffs(params)
        num1, _, den = _payoff_numerators(n, m, ip1, ip1)
        value = EpsRatFunc(EpsPoly(num1), EpsPoly(_scale(den, scale)))
        return PayoffResult(n, m, params, mode, value)
    x = stationary(n, m, "float", params)
    pay = np.array([float(p) for p in payoff_vector(params)])
    return PayoffResult(n, m, params, mode, float(x @ pay))


def payoff_pair(n: int, m: int, params: Params) -> tuple[EpsRatFunc, EpsRatFunc]:
    """Exact (pi_nm, pi_mn) from a single solve of the (n, m) chain."""
    _check_indices(n, m)
    ip1, ip2, scale = _int_payoffs(params)
    num1, num2, den = _payoff_numerators(n, m, ip1, ip2)
    den_poly = EpsPoly(_scale(den, scale))
    return (
        EpsRatFunc(EpsPoly(num1), den_poly),
        EpsRatFunc(EpsPoly(num2), den_poly),
    )


def payoff_series(n: int, m: int, params: Params, order: int) -> tuple[Fraction, ...]:
    """Exact Taylor coefficients of pi_nm about eps = 0, up to `order`."""
    _check_indices(n, m)
    ip1, _, scale = _int_payoffs(params)
    num1, _, den = _payoff_numerators(n, m, ip1, ip1)
    return taylor_ratio(num1, _scale(den, scale), order)


def selected_pair_limits(n: int, m: int) -> dict[tuple[SelectedAction, SelectedAction], Fraction]:
    """eps -> 0 limit of the stationary distribution of *selected* action pairs.

    In the limit, the stationary mass of each lumped class flows to the pair
    of actions the players intend from it, so the limit distribution lives
    on the intended pairs of the surviving classes.
    """
    _check_indices(n, m)
    codes, nums, den = _lumped_solve(n, m)
    vd = _lowest(den)[0]
    dc = den[vd]
    out: dict[tuple[SelectedAction, SelectedAction], Fraction] = {}
    for i, code in enumerate(codes):
        poly = nums[i]
        lo = _lowest(poly)
        if lo is None or lo[0] > vd:
            continue
        if lo[0] < vd:
            raise ArithmeticError("stationary component unbounded at eps = 0")
        key = (SelectedAction(code // 4), SelectedAction(code % 4))
        out[key] = out.get(key, Fraction(0)) + Fraction(lo[1], dc)
    return out


def simulate_visit_counts(
    n: int, m: int, eps: float, rounds: int, seed: int, start: ChainState = ChainState.SSTAR_SSTAR
) -> np.ndarray:
    """Round-by-round simulation oracle: visit counts of the nine states.

    Samples the chain directly from the cumulative transition rows.  Time is
    processed in blocks: within a block the walk is advanced for all nine
    possible entry states at once, then blocks are stitched sequentially, so
    the result equals the naive one-step-at-a-time walk on the same uniform
    stream (the initial state is not counted; each of `rounds` steps is).
    """
    _check_indices(n, m)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    T = _float_transition(n, m, eps)
    cum = np.cumsum(T, axis=1)
    cum[:, -1] = 1.0 + 1e-12
    rng = np.random.default_rng(seed)
    counts = np.zeros(9, dtype=np.int64)
    state = int(start)
    block = 4096
    remaining = rounds
    entries = np.arange(9)
    slab_len = 256
    while remaining >= block:
        nb = min(2048, remaining // block)
        u = rng.random((nb, block))
        nxt = np.empty((nb, block, 9), dtype=np.int8)
        for s in range(9):
            nxt[:, :, s] = np.searchsorted(cum[s], u, side="right")
        cur = np.tile(entries.astype(np.int8), (nb, 1))
        blk_counts = np.zeros(nb * 81, dtype=np.int64)
        flat_base = ((np.arange(nb)[:, None] * 9 + entries[None, :]) * 9).astype(np.int32)
        rows = np.arange(nb)[:, None]
        slab = np.empty((slab_len, nb, 9), dtype=np.int8)
        fill = 0
        for i in range(block):
            cur = nxt[rows, i, cur]
            slab[fill] = cur
            fill += 1
            if fill == slab_len:
                flat = (flat_base[None, :, :] + slab[:fill]).ravel()
                blk_counts += np.bincount(flat, minlength=nb * 81)
                fill = 0
        if fill:
            flat = (flat_base[None, :, :] + slab[:fill]).ravel()
            blk_counts += np.bincount(flat, minlength=nb * 81)
        blk_counts = blk_counts.reshape(nb, 9, 9)
        for b in range(nb):
            counts += blk_counts[b, state]
            state = int(cur[b, state])
        remaining -= nb * block
    if remaining:
        u = rng.random(remaining)
        for i in range(remaining):
            state = int(np.searchsorted(cum[state], u[i], side="right"))
            counts[state] += 1
    return counts


def asymptotic_occupancy_sigma(T: np.ndarray) -> np.ndarray:
    """Per-state asymptotic standard deviation (per sqrt(round)) of occupancy
    frequencies, from the chain's fundamental matrix."""
    k = T.shape[0]
    x = _solve_stationary_float(T)
    Z = np.linalg.inv(np.eye(k) - T + np.outer(np.ones(k), x))
    var = x * (2.0 * np.diag(Z) - 1.0) - x**2
    return np.sqrt(np.maximum(var, 0.0))


def _check_indices(n: int, m: int) -> None:
    for idx in (n, m):
        if not 0 <= idx < STRATEGY_COUNT:
            raise ValueError(f"strategy index out of range: {idx}")


def clear_exact_cache() -> None:
    """Drop cached lumped solves (mainly for tests and memory control)."""
    _lumped_solve.cache_clear()
