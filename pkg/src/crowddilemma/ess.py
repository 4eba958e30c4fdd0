"""Evolutionary stability and efficiency analysis.

A strategy n is an ESS at (d, q) when, for every other strategy m, either
pi_nn > pi_mn as eps -> 0+, or pi_nn == pi_mn identically in eps and
pi_nm > pi_mm.  If both comparisons tie, m drifts in neutrally and n is not
an ESS.  Comparisons order rational functions of eps lexicographically by
the lowest-order coefficient of the cross-multiplied difference.

The exhaustive scan over all 4096 strategies is two-staged: a float screen
at eps in {1e-3, 1e-4} rejects candidates with a clear invader (difference
beyond a margin at both values), and every surviving candidate is confirmed
with exact arithmetic against all 4095 opponents.

Equality of payoff functions is certified at the query point and re-tested
at a deterministically perturbed (d, q); a disagreement marks the pair as
degenerate in the output instead of silently deciding the verdict.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Optional, Sequence

import numpy as np

from .game import Params, SelectedAction, as_fraction, payoff_vector
from .markov import (
    _ROW16,
    _int_payoffs,
    _payoff_numerators,
    batch_float_payoffs,
    batch_self_payoffs,
    payoff_series,
)
from .ratpoly import EpsPoly, EpsRatFunc, _add, _lowest, _mul, _scale, _sub
from .strategies import CATALOG, STRATEGY_COUNT

ScanMode = Literal["screen", "exact", "float"]

_SCREEN_EPS = (1e-3, 1e-4)
_SCREEN_MARGIN = 1e-7


# ---------------------------------------------------------------------------
# region predicates

@dataclass(frozen=True)
class RegionInfo:
    """Closed-form region membership of a parameter point."""

    labels: frozenset[str]
    on_boundary: bool

    def __contains__(self, label: str) -> bool:
        return label in self.labels


def _region_members(d: Fraction, q: Fraction, strict: bool) -> frozenset[str]:
    half = Fraction(1, 2)
    hump = half * d * (2 - d)

    def lt(a, b) -> bool:
        return a < b if strict else a <= b

    labels = set()
    if lt(d, half) and lt(q, hump):
        labels.add("A")
    if lt(hump, q):
        labels.add("B")
    if lt(half, d) and lt(q, d):
        labels.add("C")
    if lt(half, d) and lt(hump, q) and lt(q, d):
        labels.add("D")
    if lt(half, d) and lt(max(hump, Fraction(3, 2) * (2 * d - 1)), q) and lt(q, d):
        labels.add("E")
    if lt(q, min(hump, 1 - 2 * d)):
        labels.add("F")
    if lt(half, d) and lt(2 * d - 1, q) and lt(q, hump):
        labels.add("G")
    if lt(max(half - d, d - half), q) and lt(q, hump):
        labels.add("H")
    if lt(max(d, half), q) and lt(q, Fraction(3, 4)):
        labels.add("I")
    if lt(max(Fraction(2, 5) * (1 + 2 * d - d * d), d), q) and lt(
        q, min(half * (-1 + 6 * d - 3 * d * d), Fraction(6, 7))
    ):
        labels.add("J")
    if lt(q, min(hump, half - d)):
        labels.add("K")
    if lt(d, half) and lt(half - d, q) and lt(q, hump):
        labels.add("L")
    if "L" in labels:
        if lt(q, 1 - 2 * d):
            labels.add("L1")
        if lt(1 - 2 * d, q):
            labels.add("L2")
    return frozenset(labels)


def region_labels(d, q) -> RegionInfo:
    """Evaluate every region predicate at exact rational (d, q).

    Membership uses strict inequalities.  The point is flagged on-boundary
    when the strict and non-strict evaluations disagree for some region,
    i.e. when it lies in a region's closure but not its interior; such
    points are reported rather than classified (the regions are open sets).
    """
    d, q = as_fraction(d), as_fraction(q)
    if not (0 < d < 1 and 0 < q < 1):
        raise ValueError("(d, q) must lie in the open unit square")
    strict = _region_members(d, q, strict=True)
    weak = _region_members(d, q, strict=False)
    return RegionInfo(strict, strict != weak)


def expected_ess_from_regions(info: RegionInfo) -> tuple[int, ...]:
    """Catalog strategies whose stability region contains the point."""
    return tuple(e.index for e in CATALOG if e.ess_region in info.labels)


def expected_efficient_from_regions(info: RegionInfo) -> tuple[int, ...]:
    """Catalog strategies whose efficiency region contains the point."""
    return tuple(
        e.index for e in CATALOG if e.efficiency_region and e.efficiency_region in info.labels
    )


def pd_reduction_check(d, q) -> bool:
    """In region (A), the one-round game between an always-attacking
    crowdsourcer and an attack-if-provoked non-crowdsourcer has the payoff
    ordering and welfare condition of a prisoner's dilemma."""
    d, q = as_fraction(d), as_fraction(q)
    info = region_labels(d, q)
    if "A" not in info.labels:
        raise ValueError(f"({d}, {q}) is not interior to region (A)")
    half = Fraction(1, 2)
    ordering = (1 - d) > half > (half - q) > (d - q)
    welfare = 1 > (1 - d) + (d - q)
    return ordering and welfare


# ---------------------------------------------------------------------------
# exact comparisons

def compare_small_eps(a: EpsRatFunc, b: EpsRatFunc) -> int:
    """Order two rational functions of eps near 0+: -1, 0 or +1.

    Zero means the two are identical functions of eps (at this (d, q))."""
    return (a - b).sign_near_zero()


def _cmp_scaled(num_a, den_a, num_b, den_b) -> int:
    """Sign near 0+ of num_a/den_a - num_b/den_b for integer polynomials whose
    denominators have positive lowest-order coefficients."""
    diff = _sub(_mul(num_a, den_b), _mul(num_b, den_a))
    lo = _lowest(diff)
    if lo is None:
        return 0
    return 1 if lo[1] > 0 else -1


def _perturbed_point(d: Fraction, q: Fraction) -> tuple[Fraction, Fraction]:
    """Deterministic nearby rational point used to re-test function equality."""
    d2 = d + Fraction(1, 257)
    if d2 >= 1:
        d2 = d - Fraction(1, 257)
    q2 = q + Fraction(1, 263)
    if q2 >= 1:
        q2 = q - Fraction(1, 263)
    return d2, q2


@dataclass(frozen=True)
class EssVerdict:
    """Outcome of testing one candidate against all 4095 alternatives."""

    candidate: int
    outcome: Literal["ESS", "invaded", "neutrally-invaded"]
    witness: Optional[int] = None
    degenerate: tuple[tuple[int, int, str], ...] = ()

    @property
    def is_ess(self) -> bool:
        return self.outcome == "ESS"


class _ExactComparer:
    """Exact pairwise payoff comparisons at a fixed (d, q), with the perturbed
    re-test for equality claims."""

    def __init__(self, d: Fraction, q: Fraction):
        self.d, self.q = d, q
        p = Params(d, q)
        self.ip1, self.ip2, _ = _int_payoffs(p)
        d2, q2 = _perturbed_point(d, q)
        p2 = Params(d2, q2)
        self.jp1, self.jp2, _ = _int_payoffs(p2)
        self._homo: dict[int, tuple] = {}

    def payoffs(self, n: int, m: int, perturbed: bool = False,
                want_first: bool = True, want_second: bool = True):
        ip1, ip2 = (self.jp1, self.jp2) if perturbed else (self.ip1, self.ip2)
        return _payoff_numerators(n, m, ip1, ip2, want_first, want_second)

    def homo(self, n: int, perturbed: bool = False):
        key = (n, perturbed)
        if key not in self._homo:
            num, _, den = self.payoffs(n, n, perturbed, want_second=False)
            self._homo[key] = (num, den)
        return self._homo[key]

    def confirm(self, n: int, invaders: Optional[Iterable[int]] = None) -> EssVerdict:
        """Run the two-tier test for candidate n against every opponent."""
        nn_num, nn_den = self.homo(n)
        degenerate: list[tuple[int, int, str]] = []
        scan = invaders if invaders is not None else _CONFIRM_ORDER
        for m in scan:
            if m == n:
                continue
            _, num_mn, den = self.payoffs(n, m, want_first=False)
            s1 = _cmp_scaled(nn_num, nn_den, num_mn, den)
            if s1 > 0:
                continue
            if s1 < 0:
                return EssVerdict(n, "invaded", m, tuple(degenerate))
            # first tier ties as functions of eps at this point: re-test the
            # equality claim at the perturbed point before using the tie.
            pn_num, pn_den = self.homo(n, perturbed=True)
            p_nm, p_mn, p_den = self.payoffs(n, m, perturbed=True)
            if _cmp_scaled(pn_num, pn_den, p_mn, p_den) != 0:
                degenerate.append((n, m, "first-tier-equality"))
            num_nm, _, _ = self.payoffs(n, m, want_second=False)
            mm_num, mm_den = self.homo(m)
            s2 = _cmp_scaled(num_nm, den, mm_num, mm_den)
            if s2 > 0:
                continue
            if s2 == 0:
                pm_num, pm_den = self.homo(m, perturbed=True)
                if _cmp_scaled(p_nm, p_den, pm_num, pm_den) != 0:
                    degenerate.append((n, m, "second-tier-equality"))
                return EssVerdict(n, "neutrally-invaded", m, tuple(degenerate))
            return EssVerdict(n, "invaded", m, tuple(degenerate))
        return EssVerdict(n, "ESS", None, tuple(degenerate))

    def compare_homogeneous(self, n: int, m: int) -> tuple[int, bool]:
        """Order pi_nn vs pi_mm near 0+; also reports whether an equality
        failed the perturbed re-test."""
        a_num, a_den = self.homo(n)
        b_num, b_den = self.homo(m)
        s = _cmp_scaled(a_num, a_den, b_num, b_den)
        if s != 0:
            return s, False
        pa_num, pa_den = self.homo(n, perturbed=True)
        pb_num, pb_den = self.homo(m, perturbed=True)
        return 0, _cmp_scaled(pa_num, pa_den, pb_num, pb_den) != 0


# ---------------------------------------------------------------------------
# float screen

#: Deterministic first wave of invaders; finds a clear invader for the vast
#: majority of candidates before the full sweep runs.
_KILLER_INVADERS: tuple[int, ...] = tuple(
    sorted({e.index for e in CATALOG} | set(range(0, STRATEGY_COUNT, 64)) | {4095})
)

#: Invader order for exact confirmation: likely invaders first so rejected
#: candidates exit early; the full order is fixed, keeping verdicts and
#: witnesses deterministic.
_CONFIRM_ORDER: tuple[int, ...] = _KILLER_INVADERS + tuple(
    i for i in range(STRATEGY_COUNT) if i not in set(_KILLER_INVADERS)
)


def _screen_survivors(d: Fraction, q: Fraction, margin: float = _SCREEN_MARGIN,
                      eps_values: Sequence[float] = _SCREEN_EPS) -> tuple[list[int], dict[int, int]]:
    """Float screen: reject candidates with a clear invader at every screen eps.

    A fixed first wave of invaders is tried against all candidates in one
    vectorized pass; only the candidates it cannot reject get the full
    4095-invader sweep.  Returns (survivors, clear_witness) where
    clear_witness maps each rejected candidate to one invader that beat it
    beyond the margin at every screen eps.
    """
    from .markov import _MIRROR_IDX, _T1, _T2, _response_matrix, _row16_float, _stationary_float_residuals

    all_idx = np.arange(STRATEGY_COUNT)
    resp = _response_matrix()
    t1, t2 = np.array(_T1), np.array(_T2)
    mirror_idx = np.array(_MIRROR_IDX)

    self_pay = {}
    for eps in eps_values:
        pay, res = batch_self_payoffs(all_idx, eps, Params(d, q, eps))
        pay[res > 1e-8] = np.nan
        self_pay[eps] = pay

    killers = np.array(_KILLER_INVADERS)
    beaten = np.ones((STRATEGY_COUNT, len(killers)), dtype=bool)
    for eps in eps_values:
        rows = _row16_float(eps)
        pay1 = np.array([float(p) for p in payoff_vector(Params(d, q, eps))])
        pay2 = pay1[mirror_idx]
        for lo in range(0, STRATEGY_COUNT, 256):
            cand = all_idx[lo:lo + 256]
            a1 = resp[cand][:, None, t2]                      # (C, 1, 9)
            a2 = resp[killers][None, :, t1]                   # (1, K, 9)
            T = rows[a1 * 4 + a2]                             # (C, K, 9, 9)
            C, K = len(cand), len(killers)
            x, res = _stationary_float_residuals(T.reshape(C * K, 9, 9))
            pi_mn = (x @ pay2).reshape(C, K)
            delta = self_pay[eps][cand][:, None] - pi_mn
            ok = (delta < -margin) & (res.reshape(C, K) <= 1e-8)
            ok &= np.isfinite(delta)
            beaten[cand] &= ok

    clear_witness: dict[int, int] = {}
    undecided: list[int] = []
    for n in range(STRATEGY_COUNT):
        hits = killers[beaten[n]]
        hits = hits[hits != n]
        if len(hits):
            clear_witness[n] = int(hits[0])
        else:
            undecided.append(n)

    survivors: list[int] = []
    for n in undecided:
        row_beaten = np.ones(STRATEGY_COUNT, dtype=bool)
        for eps in eps_values:
            p = Params(d, q, eps)
            _, pi_mn, res = batch_float_payoffs(n, all_idx, eps, p)
            delta = self_pay[eps][n] - pi_mn
            row_beaten &= (delta < -margin) & (res <= 1e-8) & np.isfinite(delta)
            if not row_beaten.any():
                break
        hits = all_idx[row_beaten]
        hits = hits[hits != n]
        if len(hits):
            clear_witness[n] = int(hits[0])
        else:
            survivors.append(n)
    return survivors, clear_witness


def _float_two_tier(n: int, d: Fraction, q: Fraction, margin: float,
                    eps_values: Sequence[float]) -> bool:
    """Approximate ESS judgment from float payoffs alone (mode 'float').

    A candidate is dropped only when an invader clearly beats it at every
    screening eps (first tier, or tie-then-lose in the second tier).
    Differences inside the margin count as ties and are kept, so marginal
    candidates are over-reported relative to the exact modes."""
    all_idx = np.arange(STRATEGY_COUNT)
    lose1 = np.ones(STRATEGY_COUNT, dtype=bool)
    tie1 = np.ones(STRATEGY_COUNT, dtype=bool)
    lose2 = np.ones(STRATEGY_COUNT, dtype=bool)
    for eps in eps_values:
        p = Params(d, q, eps)
        self_pay, _ = batch_self_payoffs(all_idx, eps, p)
        pi_nm, pi_mn, _ = batch_float_payoffs(n, all_idx, eps, p)
        d1 = self_pay[n] - pi_mn
        d2 = pi_nm - self_pay
        d1[n] = np.inf
        d2[n] = np.inf
        lose1 &= d1 < -margin
        tie1 &= np.abs(d1) <= margin
        lose2 &= d2 < -margin
    return not (lose1 | (tie1 & lose2)).any()


# ---------------------------------------------------------------------------
# public analysis entry points

@dataclass(frozen=True)
class EssReport:
    """Full classification of one parameter point."""

    d: Fraction
    q: Fraction
    ess: tuple[int, ...]
    efficient: tuple[int, ...]
    series: dict[int, tuple[Fraction, ...]] = field(default_factory=dict)
    regions: frozenset[str] = frozenset()
    on_boundary: bool = False
    degenerate: tuple[tuple[int, int, str], ...] = ()
    mode: str = "screen"


def is_ess(n: int, d, q, mode: ScanMode = "screen") -> EssVerdict:
    """Two-tier stability test of one candidate against all 4095 others."""
    d, q = as_fraction(d), as_fraction(q)
    if mode == "float":
        ok = _float_two_tier(n, d, q, _SCREEN_MARGIN, _SCREEN_EPS)
        return EssVerdict(n, "ESS" if ok else "invaded")
    comparer = _ExactComparer(d, q)
    if mode == "exact":
        return comparer.confirm(n)
    # screen for a cheap clear invader first, then certify exactly
    margin = _SCREEN_MARGIN
    for invaders in (np.array(_KILLER_INVADERS), np.arange(STRATEGY_COUNT)):
        beaten = np.ones(len(invaders), dtype=bool)
        for eps in _SCREEN_EPS:
            p = Params(d, q, eps)
            pay_nn, _ = batch_self_payoffs(np.array([n]), eps, p)
            _, pi_mn, res = batch_float_payoffs(n, invaders, eps, p)
            beaten &= (pay_nn[0] - pi_mn < -margin) & (res <= 1e-8)
        hits = invaders[beaten]
        hits = hits[hits != n]
        for m in hits[:8]:
            verdict = comparer.confirm(n, invaders=[int(m)])
            if verdict.outcome != "ESS":
                return verdict
    return comparer.confirm(n)


def _confirm_candidate(args) -> EssVerdict:
    n, d, q = args
    return _ExactComparer(d, q).confirm(n)


def scan_all_ess(d, q, mode: ScanMode = "screen", workers: int = 1,
                 with_series: bool = True) -> EssReport:
    """Exhaustive ESS scan of all 4096 reactive strategies at exact (d, q)."""
    d, q = as_fraction(d), as_fraction(q)
    info = region_labels(d, q)
    degenerate: list[tuple[int, int, str]] = []

    if mode == "exact":
        candidates = list(range(STRATEGY_COUNT))
    else:
        candidates, _ = _screen_survivors(d, q)

    ess: list[int] = []
    if mode == "float":
        for n in candidates:
            if _float_two_tier(n, d, q, _SCREEN_MARGIN, _SCREEN_EPS):
                ess.append(n)
    else:
        jobs = [(n, d, q) for n in candidates]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                verdicts = list(pool.map(_confirm_candidate, jobs))
        else:
            comparer = _ExactComparer(d, q)
            verdicts = [comparer.confirm(n) for n in candidates]
        for v in verdicts:
            degenerate.extend(v.degenerate)
            if v.is_ess:
                ess.append(v.candidate)

    ess.sort()
    efficient, eff_degenerate = _efficient_among(ess, d, q)
    degenerate.extend(eff_degenerate)
    series = {}
    if with_series:
        p = Params(d, q)
        series = {n: payoff_series(n, n, p, 3) for n in ess}
    return EssReport(
        d=d, q=q, ess=tuple(ess), efficient=efficient, series=series,
        regions=info.labels, on_boundary=info.on_boundary,
        degenerate=tuple(dict.fromkeys(degenerate)), mode=mode,
    )


def _efficient_among(ess: Sequence[int], d: Fraction, q: Fraction):
    """Members of the ESS set with maximal homogeneous payoff near 0+ (ties kept)."""
    if not ess:
        return (), []
    comparer = _ExactComparer(d, q)
    degenerate: list[tuple[int, int, str]] = []
    efficient = []
    for n in ess:
        best = True
        for m in ess:
            if m == n:
                continue
            s, degen = comparer.compare_homogeneous(n, m)
            if degen:
                degenerate.append((n, m, "efficiency-equality"))
            if s < 0:
                best = False
                break
        if best:
            efficient.append(n)
    return tuple(efficient), degenerate


def efficient_subset(report: EssReport) -> tuple[int, ...]:
    """Efficient members of a report's ESS set (recomputed exactly)."""
    subset, _ = _efficient_among(report.ess, report.d, report.q)
    return subset


# ---------------------------------------------------------------------------
# single-shot (non-iterated) game

def single_shot_payoff_matrix(d, q) -> list[list[EpsPoly]]:
    """Expected one-round payoffs of the four pure actions under the error
    channel, as polynomials in eps at exact (d, q)."""
    params = Params(as_fraction(d), as_fraction(q))
    pay = payoff_vector(params)
    out = []
    for a in range(4):
        row = []
        for b in range(4):
            acc: list = []
            for s in range(9):
                w = _ROW16[a * 4 + b][s]
                if w and pay[s]:
                    acc = _add(acc, _scale(w, pay[s]))
            row.append(EpsPoly(acc))
        out.append(row)
    return out


def single_shot_ess(d, q) -> frozenset[SelectedAction]:
    """ESS set of the one-shot game, judged as eps -> 0+.

    Without the error perturbation the not-attack action is only neutrally
    stable against its attacking twin when neither crowdsources; the
    perturbed matrix resolves those ties at first order."""
    M = single_shot_payoff_matrix(d, q)
    winners = []
    for n in range(4):
        ok = True
        for m in range(4):
            if m == n:
                continue
            t1 = M[n][n] - M[m][n]
            lo = t1.lowest_order()
            if lo is not None:
                if lo[1] < 0:
                    ok = False
                    break
                continue
            t2 = M[n][m] - M[m][m]
            lo2 = t2.lowest_order()
            if lo2 is None or lo2[1] < 0:
                ok = False
                break
        if ok:
            winners.append(SelectedAction(n))
    return frozenset(winners)
