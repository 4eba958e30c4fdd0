from fractions import Fraction

import pytest

from crowddilemma.ess import (
    _ExactComparer,
    _screen_survivors,
    compare_small_eps,
    efficient_subset,
    expected_efficient_from_regions,
    expected_ess_from_regions,
    is_ess,
    pd_reduction_check,
    region_labels,
    scan_all_ess,
    single_shot_ess,
    single_shot_payoff_matrix,
)
from crowddilemma.game import Params, SelectedAction
from crowddilemma.markov import average_payoff
from crowddilemma.strategies import catalog_index

CA, CN, SA, SN = SelectedAction.CA, SelectedAction.CN, SelectedAction.SA, SelectedAction.SN


class TestRegions:
    @pytest.mark.parametrize(
        "d,q,want",
        [
            (Fraction(1, 5), Fraction(1, 20), {"A", "F", "K"}),
            (Fraction(3, 5), Fraction(3, 10), {"C", "G", "H"}),
            (Fraction(2, 5), Fraction(1, 4), {"A", "H", "L", "L2"}),
            (Fraction(1, 5), Fraction(1, 2), {"B"}),
            (Fraction(4, 5), Fraction(3, 5), {"B", "C", "D"}),
            (Fraction(21, 50), Fraction(13, 100), {"A", "F", "H", "L", "L1"}),
        ],
    )
    def test_membership(self, d, q, want):
        info = region_labels(d, q)
        assert info.labels == frozenset(want)

    def test_boundary_flagging(self):
        assert region_labels(Fraction(1, 2), Fraction(9, 10)).on_boundary  # d = 1/2
        # q exactly on the crowdsourcing hump (1/2) d (2-d) at d = 2/5
        assert region_labels(Fraction(2, 5), Fraction(8, 25)).on_boundary
        assert region_labels(Fraction(3, 5), Fraction(3, 5)).on_boundary  # q = d
        assert not region_labels(Fraction(1, 5), Fraction(1, 20)).on_boundary

    def test_region_to_catalog_mapping(self):
        info = region_labels(Fraction(4, 5), Fraction(3, 5))
        assert set(expected_ess_from_regions(info)) == {
            catalog_index(k) for k in (2, 3, 4, 5, 6, 7, 8, 9, 10)
        }
        assert set(expected_efficient_from_regions(info)) == {
            catalog_index(k) for k in (2, 3, 4, 5, 6, 7, 8, 9)
        }

    def test_rejects_points_outside_unit_square(self):
        with pytest.raises(ValueError):
            region_labels(Fraction(0), Fraction(1, 2))


class TestCompare:
    def test_equal_functions(self):
        p = Params(Fraction(1, 5), Fraction(1, 20))
        a = average_payoff(0, 0, "exact", p).value
        assert compare_small_eps(a, a) == 0

    def test_strategy12_beats_uncond_ca_at_order_eps(self):
        p = Params(Fraction(1, 5), Fraction(1, 20))
        s12 = catalog_index(12)
        a = average_payoff(s12, s12, "exact", p).value
        b = average_payoff(0, 0, "exact", p).value
        assert compare_small_eps(a, b) == 1
        assert (a - b).taylor(1) == (0, p.q / 2)

    def test_strategy14_beats_uncond_ca_at_order_one(self):
        p = Params(Fraction(2, 5), Fraction(1, 4))
        s14 = catalog_index(14)
        a = average_payoff(s14, s14, "exact", p).value
        b = average_payoff(0, 0, "exact", p).value
        assert compare_small_eps(a, b) == 1
        assert (a - b).taylor(0)[0] == p.q


class TestIsEss:
    def test_uncond_cn_in_region_b(self):
        verdict = is_ess(catalog_index(2), Fraction(1, 5), Fraction(1, 2))
        assert verdict.is_ess

    def test_strategy13_in_region_g(self):
        verdict = is_ess(catalog_index(13), Fraction(3, 5), Fraction(3, 10))
        assert verdict.is_ess

    def test_uncond_sa_outside_region_c(self):
        verdict = is_ess(catalog_index(3), Fraction(1, 5), Fraction(1, 20))
        assert verdict.outcome == "invaded"
        assert verdict.witness is not None

    def test_exact_mode_agrees(self):
        verdict = is_ess(catalog_index(3), Fraction(1, 5), Fraction(1, 20), mode="exact")
        assert verdict.outcome == "invaded"

    def test_strategy14_stability_boundary(self):
        # resists the always-attacking crowdsourcer exactly when q > 1/2 - d
        s14, ca = catalog_index(14), 0
        d = Fraction(2, 5)
        for offset, resists in ((Fraction(1, 50), True), (-Fraction(1, 50), False)):
            q = Fraction(1, 2) - d + offset
            comp = _ExactComparer(d, q)
            verdict = comp.confirm(s14, invaders=[ca])
            assert verdict.is_ess == resists


class TestScan:
    @pytest.mark.parametrize(
        "d,q",
        [
            (Fraction(1, 5), Fraction(1, 20)),
            (Fraction(3, 5), Fraction(3, 10)),
            (Fraction(2, 5), Fraction(1, 4)),
        ],
    )
    def test_scan_matches_region_predictions(self, d, q):
        info = region_labels(d, q)
        report = scan_all_ess(d, q)
        assert set(report.ess) == set(expected_ess_from_regions(info))
        assert set(report.efficient) == set(expected_efficient_from_regions(info))
        assert report.regions == info.labels
        assert not report.degenerate

    def test_report_series_matches_catalog(self):
        report = scan_all_ess(Fraction(1, 5), Fraction(1, 20))
        q = Fraction(1, 20)
        assert report.series[0] == (Fraction(1, 2) - q, 2 * q, -q, 0)
        assert report.series[2] == (
            Fraction(1, 2) - q, Fraction(5, 2) * q, -Fraction(5, 2) * q, q)

    def test_efficient_subset_recompute(self):
        report = scan_all_ess(Fraction(3, 5), Fraction(3, 10))
        assert efficient_subset(report) == report.efficient == (catalog_index(3),)

    def test_efficiency_tie_keeps_all(self):
        # in the deep-(D) intersection the tied unconditional and conditional
        # strategies are all efficient
        report = scan_all_ess(Fraction(4, 5), Fraction(3, 5))
        assert set(report.efficient) == {catalog_index(k) for k in range(2, 10)}

    def test_strategy13_is_the_only_underperforming_ess(self):
        report = scan_all_ess(Fraction(3, 5), Fraction(3, 10))
        s13, sa = catalog_index(13), catalog_index(3)
        assert set(report.ess) == {sa, s13, catalog_index(14)}
        # zeroth-order payoffs: 13 sits strictly below the coexisting
        # unconditional ESS, and nothing else does
        below = [n for n in report.ess if report.series[n][0] < report.series[sa][0]]
        assert below == [s13]

    def test_float_mode_is_an_upper_bound(self):
        # float verdicts keep anything not clearly beaten, so the reported
        # set contains the exact one
        d, q = Fraction(1, 5), Fraction(1, 20)
        report = scan_all_ess(d, q, mode="float")
        info = region_labels(d, q)
        assert set(expected_ess_from_regions(info)) <= set(report.ess)
        exact = scan_all_ess(d, q, mode="screen")
        assert set(exact.ess) <= set(report.ess)
        assert report.mode == "float"


class TestScreenSoundness:
    def test_screen_decisions_match_exact(self):
        d, q = Fraction(3, 5), Fraction(3, 10)
        survivors, witnesses = _screen_survivors(d, q)
        comp = _ExactComparer(d, q)
        sample = sorted(witnesses.items())[:25]
        for n, m in sample:
            verdict = comp.confirm(n, invaders=[m])
            assert verdict.outcome == "invaded" and verdict.witness == m

    def test_survivors_include_all_true_ess(self):
        d, q = Fraction(3, 5), Fraction(3, 10)
        survivors, _ = _screen_survivors(d, q)
        info = region_labels(d, q)
        assert set(expected_ess_from_regions(info)) <= set(survivors)


class TestSingleShot:
    def test_example_points(self):
        assert single_shot_ess(Fraction(1, 5), Fraction(1, 20)) == {CA}
        assert single_shot_ess(Fraction(4, 5), Fraction(3, 5)) == {CN, SA}
        assert single_shot_ess(Fraction(1, 5), Fraction(1, 2)) == {CN}

    def test_sn_is_never_an_ess(self):
        for i in range(1, 20, 3):
            for j in range(1, 20, 3):
                assert SN not in single_shot_ess(Fraction(i, 20), Fraction(j, 20))

    def test_attack_tie_resolved_by_error_terms(self):
        # on q = d with d > 1/2 the noiseless game leaves SA and SN neutrally
        # tied; the perturbed matrix breaks the tie against SA
        assert single_shot_ess(Fraction(3, 5), Fraction(3, 5)) == {CN}

    def test_matrix_constant_terms(self):
        d, q = Fraction(1, 5), Fraction(1, 20)
        M = single_shot_payoff_matrix(d, q)
        assert M[CA][CA].coeffs[0] == Fraction(1, 2) - q
        assert M[SA][CN].coeffs[0] == d - q
        assert M[SN][SN].coeffs[0] == Fraction(1, 2)


class TestPdReduction:
    def test_holds_in_region_a(self):
        assert pd_reduction_check(Fraction(1, 5), Fraction(1, 20))
        assert pd_reduction_check(Fraction(2, 5), Fraction(1, 4))

    def test_guard_outside_region_a(self):
        with pytest.raises(ValueError):
            pd_reduction_check(Fraction(3, 5), Fraction(3, 10))
