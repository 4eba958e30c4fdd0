import random
from fractions import Fraction

import numpy as np

from crowddilemma.game import CHAIN_STATES, ChainState, Params, SelectedAction, mirror
from crowddilemma.markov import (
    asymptotic_occupancy_sigma,
    average_payoff,
    build_transition,
    payoff_pair,
    payoff_series,
    selected_pair_limits,
    simulate_visit_counts,
    stationary,
)
from crowddilemma.ratpoly import EpsPoly, EpsRatFunc
from crowddilemma.strategies import catalog_index

P0 = Params(Fraction(2, 7), Fraction(3, 11))


def poly(*coeffs):
    return EpsPoly(coeffs)


class TestTransition:
    def test_uncond_ca_rows_are_state_independent(self):
        T = build_transition(0, 0, "exact", P0)
        for row in T[1:]:
            assert row == T[0]

    def test_uncond_ca_row_at_zero_error(self):
        T = build_transition(0, 0, "float", Params(Fraction(1, 2), Fraction(1, 2), 0.0))
        assert T[0, ChainState.CA_CA] == 1.0
        assert T[0].sum() == 1.0

    def test_uncond_ca_to_mutual_solo_is_eps_squared(self):
        # both players must flip their crowdsourcing bit
        T = build_transition(0, 0, "exact", P0)
        assert T[ChainState.CA_CA][ChainState.SSTAR_SSTAR] == poly(0, 0, 1)

    def test_strategy12_escape_from_mutual_solo(self):
        s12 = catalog_index(12)
        T = build_transition(s12, s12, "exact", P0)
        row = T[ChainState.SSTAR_SSTAR]
        stay = row[ChainState.SSTAR_SSTAR]
        # either player erring back to crowdsourcing ends the mutual-solo run
        escape = EpsPoly.one() - stay
        assert escape == poly(0, 2, -1)

    def test_exact_rows_sum_to_one_large_sample(self):
        rng = np.random.default_rng(512)
        one = EpsPoly.one()
        seen_rows = {}
        for n, m in rng.integers(0, 4096, size=(10_000, 2)):
            T = build_transition(int(n), int(m), "exact", P0)
            for row in T:
                key = tuple(e.coeffs for e in row)
                if key in seen_rows:
                    continue
                total = EpsPoly.zero()
                for entry in row:
                    total = total + entry
                assert total == one
                seen_rows[key] = True
        # the gather construction admits at most 16 distinct rows
        assert len(seen_rows) <= 16


class TestStationary:
    def test_uncond_sa_vs_uncond_sn_limit(self):
        dist = stationary(catalog_index(3), 4095, "exact", P0)
        assert dist[ChainState.SSTAR_SSTAR].taylor(0)[0] == 1

    def test_strategy14_pair_limit(self):
        s14 = catalog_index(14)
        dist = stationary(s14, s14, "exact", P0)
        assert dist[ChainState.SSTAR_SSTAR].taylor(0)[0] == 1

    def test_strategy13_pair_limit_splits(self):
        s13 = catalog_index(13)
        dist = stationary(s13, s13, "exact", P0)
        assert dist[ChainState.CA_CA].taylor(0)[0] == Fraction(1, 2)
        assert dist[ChainState.SSTAR_SSTAR].taylor(0)[0] == Fraction(1, 2)

    def test_role_swap_symmetry(self):
        rng = random.Random(17)
        for _ in range(10):
            n, m = rng.randrange(4096), rng.randrange(4096)
            a = stationary(n, m, "exact", P0)
            b = stationary(m, n, "exact", P0)
            for s in CHAIN_STATES:
                assert a[s] == b[mirror(s)]

    def test_float_matches_exact(self):
        eps = Fraction(1, 1000)
        rng = random.Random(23)
        worst = 0.0
        for _ in range(100):
            n, m = rng.randrange(4096), rng.randrange(4096)
            exact = stationary(n, m, "exact", P0)
            approx = stationary(n, m, "float", Params(P0.d, P0.q, 1e-3))
            for s in range(9):
                worst = max(worst, abs(float(exact[s](eps)) - approx[s]))
        assert worst <= 1e-10

    def test_stationary_sums_to_one(self):
        dist = stationary(123, 3210, "exact", P0)
        total = EpsRatFunc(EpsPoly.zero())
        for comp in dist:
            total = total + comp
        assert total.num == poly(1) and total.den == poly(1)


class TestPayoffs:
    def test_uncond_ca_homogeneous_payoff(self):
        q = P0.q
        value = average_payoff(0, 0, "exact", P0).value
        assert value == EpsRatFunc(EpsPoly([Fraction(1, 2) - q, 2 * q, -q]))

    def test_uncond_cn_homogeneous_payoff(self):
        cn = catalog_index(2)
        q = P0.q
        value = average_payoff(cn, cn, "exact", P0).value
        assert value == EpsRatFunc(EpsPoly([Fraction(1, 2), -q, q]))

    def test_uncond_sa_vs_uncond_cn_limit(self):
        value = average_payoff(catalog_index(3), catalog_index(2), "exact", P0).value
        assert value.taylor(0)[0] == P0.d - P0.q

    def test_payoff_pair_consistency(self):
        pi_nm, pi_mn = payoff_pair(431, 2871, P0)
        assert pi_nm == average_payoff(431, 2871, "exact", P0).value
        assert pi_mn == average_payoff(2871, 431, "exact", P0).value

    def test_series_examples(self):
        q = P0.q
        assert payoff_series(catalog_index(14), catalog_index(14), P0, 3) == (
            Fraction(1, 2), -3 * q, 9 * q, -10 * q)
        assert payoff_series(catalog_index(15), catalog_index(15), P0, 3) == (
            Fraction(1, 2), -2 * q, 0, 20 * q)
        assert payoff_series(catalog_index(16), catalog_index(16), P0, 3) == (
            Fraction(1, 2), -2 * q, q / 4, Fraction(399, 16) * q)

    def test_series_matches_float_finite_differences(self):
        n, m = 1721, 905
        series = payoff_series(n, m, P0, 1)
        h = 1e-6
        v1 = average_payoff(n, m, "float", Params(P0.d, P0.q, h)).value
        v2 = average_payoff(n, m, "float", Params(P0.d, P0.q, 2 * h)).value
        c0 = float(series[0])
        assert abs(v1 - c0) < 1e-4
        assert abs((v2 - v1) / h - float(series[1])) < 1e-2

    def test_float_exact_agreement_at_fixed_eps(self):
        rng = random.Random(31)
        for _ in range(40):
            n, m = rng.randrange(4096), rng.randrange(4096)
            exact = average_payoff(n, m, "exact", P0).value(Fraction(1, 1000))
            approx = average_payoff(n, m, "float", Params(P0.d, P0.q, 1e-3)).value
            assert abs(float(exact) - approx) <= 1e-10


class TestSelectedLimits:
    def test_uncond_ca(self):
        limits = selected_pair_limits(0, 0)
        assert limits == {(SelectedAction.CA, SelectedAction.CA): Fraction(1)}

    def test_strategy14_mass_flows_to_mutual_sa(self):
        s14 = catalog_index(14)
        limits = selected_pair_limits(s14, s14)
        assert limits == {(SelectedAction.SA, SelectedAction.SA): Fraction(1)}

    def test_limits_form_distribution(self):
        rng = random.Random(47)
        for _ in range(20):
            n, m = rng.randrange(4096), rng.randrange(4096)
            limits = selected_pair_limits(n, m)
            assert sum(limits.values()) == 1
            assert all(v >= 0 for v in limits.values())


class TestSimulator:
    def test_matches_naive_walk(self):
        n, m, eps, seed = 1234, 567, 0.05, 99
        rounds = 10_000
        counts = simulate_visit_counts(n, m, eps, rounds, seed)
        # replicate the generator consumption: full blocks first, then tail
        T = build_transition(n, m, "float", Params(Fraction(1, 2), Fraction(1, 2), eps))
        cum = np.cumsum(T, axis=1)
        cum[:, -1] = 1.0 + 1e-12
        rng = np.random.default_rng(seed)
        block = 4096
        nb = rounds // block
        stream = [rng.random((nb, block)).ravel(), rng.random(rounds - nb * block)]
        uniforms = np.concatenate(stream)
        state = int(ChainState.SSTAR_SSTAR)
        naive = np.zeros(9, dtype=np.int64)
        for u in uniforms:
            state = int(np.searchsorted(cum[state], u, side="right"))
            naive[state] += 1
        assert (counts == naive).all()
        assert counts.sum() == rounds

    def test_deterministic(self):
        a = simulate_visit_counts(11, 22, 0.02, 5000, seed=3)
        b = simulate_visit_counts(11, 22, 0.02, 5000, seed=3)
        assert (a == b).all()

    def test_simulation_reproduces_stationary(self):
        # 20 random pairs, 1e7 rounds; tolerance from the chain's exact
        # asymptotic occupancy variance (binomial errors understate the
        # autocorrelation of metastable chains)
        rng = random.Random(2024)
        eps = 0.05
        rounds = 10**7
        p = Params(Fraction(1, 2), Fraction(1, 2), eps)
        for trial in range(20):
            n, m = rng.randrange(4096), rng.randrange(4096)
            T = build_transition(n, m, "float", p)
            x = stationary(n, m, "float", p)
            sigma = asymptotic_occupancy_sigma(T)
            counts = simulate_visit_counts(n, m, eps, rounds, seed=5000 + trial)
            freq = counts / rounds
            bound = 3 * sigma / rounds**0.5 + 1e-4
            assert (np.abs(freq - x) <= bound).all(), (n, m, freq - x, bound)
