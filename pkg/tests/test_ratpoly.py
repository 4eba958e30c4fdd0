from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from crowddilemma.ratpoly import (
    EpsPoly,
    EpsRatFunc,
    ExactSolveError,
    solve_stationary_exact,
    taylor_ratio,
)


def poly(*coeffs):
    return EpsPoly(coeffs)


coeff_st = st.one_of(
    st.integers(min_value=-9, max_value=9),
    st.fractions(min_value=-3, max_value=3, max_denominator=7),
)
poly_st = st.builds(EpsPoly, st.lists(coeff_st, max_size=5))


class TestPolyArithmetic:
    def test_add_mul_sub_examples(self):
        eps = EpsPoly.eps()
        assert eps + eps * eps == poly(0, 1, 1)
        one_minus = poly(1, -1)
        assert one_minus * one_minus == poly(1, -2, 1)
        p = poly(3, 0, 2)
        assert (p - p).is_zero()

    def test_lowest_order(self):
        q = Fraction(1, 5)
        p = poly(0, q / 2, 0, -3 * q)
        assert p.lowest_order() == (1, Fraction(1, 10))
        assert EpsPoly.zero().lowest_order() is None
        cancel = poly(0, 0, 1) - poly(0, 0, 1) + poly(0, 0, 0, 0, 1)
        assert cancel.lowest_order() == (4, 1)

    def test_eval_and_str(self):
        p = poly(Fraction(1, 2), -1, 1)
        assert p(Fraction(1, 2)) == Fraction(1, 4)
        assert str(p) == "1/2 - eps + eps^2"
        assert str(EpsPoly.zero()) == "0"

    @given(a=poly_st, b=poly_st, c=poly_st)
    @settings(max_examples=200, deadline=None)
    def test_ring_axioms(self, a, b, c):
        assert (a + b) + c == a + (b + c)
        assert a + b == b + a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a - a).is_zero()


class TestRatFunc:
    def test_normalization_cancels_common_eps(self):
        f = EpsRatFunc(poly(0, 0, 2), poly(0, 4))  # 2eps^2 / 4eps
        assert f == EpsRatFunc(poly(0, 1), poly(2))
        assert f.taylor(2) == (0, Fraction(1, 2), 0)

    def test_gcd_reduction(self):
        # (1-eps)(1+eps) / (1+eps) reduces to 1-eps
        f = EpsRatFunc(poly(1, 0, -1), poly(1, 1))
        assert f.num == poly(1, -1)
        assert f.den == poly(1)

    def test_sub_example(self):
        one_over = EpsRatFunc(poly(1), poly(1, -1))  # 1/(1-eps)
        one = EpsRatFunc(poly(1), poly(1))
        diff = one_over - one
        assert diff.num == poly(0, 1)
        assert diff.den == poly(1, -1)

    def test_sub_self_is_zero(self):
        f = EpsRatFunc(poly(2, 3), poly(1, 0, 5))
        assert (f - f).is_zero()

    def test_sign_near_zero(self):
        q = Fraction(1, 2)
        assert EpsRatFunc(poly(0, q / 2, 1), poly(1, 3)).sign_near_zero() == 1
        assert EpsRatFunc(poly(0, 0, -q, 1), poly(1)).sign_near_zero() == -1
        assert EpsRatFunc(poly(), poly(1)).sign_near_zero() == 0

    def test_cross_valuation_sign(self):
        # eps/(1+eps) minus eps^2/(2+eps) is positive near zero
        a = EpsRatFunc(poly(0, 1), poly(1, 1))
        b = EpsRatFunc(poly(0, 0, 1), poly(2, 1))
        assert (a - b).sign_near_zero() == 1

    def test_taylor_geometric(self):
        f = EpsRatFunc(poly(1), poly(1, -1))
        assert f.taylor(3) == (1, 1, 1, 1)

    def test_taylor_of_polynomial_returns_coeffs(self):
        f = EpsRatFunc(poly(Fraction(1, 2), 0, -2), poly(1))
        assert f.taylor(3) == (Fraction(1, 2), 0, -2, 0)

    def test_taylor_rejects_pole(self):
        f = EpsRatFunc(poly(1), poly(0, 1))  # 1/eps
        with pytest.raises(ValueError):
            f.taylor(2)

    def test_denominator_sign_convention(self):
        f = EpsRatFunc(poly(1), poly(-2, 1))
        assert f.den.lowest_order()[1] > 0
        assert f.num == poly(-1)

    def test_zero_denominator_rejected(self):
        with pytest.raises(ZeroDivisionError):
            EpsRatFunc(poly(1), EpsPoly.zero())

    def test_equality_across_representations(self):
        a = EpsRatFunc(poly(0, 2), poly(2))
        b = EpsRatFunc(poly(0, 0, 3), poly(0, 3))
        assert a == b and hash(a) == hash(b)

    @given(
        n1=poly_st, d1=poly_st.filter(lambda p: not p.is_zero()),
        n2=poly_st, d2=poly_st.filter(lambda p: not p.is_zero()),
    )
    @settings(max_examples=150, deadline=None)
    def test_sub_then_add_roundtrip(self, n1, d1, n2, d2):
        a = EpsRatFunc(n1, d1)
        b = EpsRatFunc(n2, d2)
        assert (a - b) + b == a


class TestStationarySolve:
    def test_absorbing_limit(self):
        # state 1 is favored at rate eps vs leakage eps^2, so the eps -> 0
        # limit puts all mass there
        T = [
            [poly(1, -1), poly(0, 1)],
            [poly(0, 0, 1), poly(1, 0, -1)],
        ]
        x = solve_stationary_exact(T)
        assert x[0].taylor(1)[0] == 0
        assert x[1].taylor(0)[0] == 1
        assert (x[0] + x[1]).num == poly(1)

    def test_three_state_identities(self):
        T = [
            [poly(1, -1, -1), poly(0, 1), poly(0, 0, 1)],
            [poly(0, 1), poly(1, -2), poly(0, 1)],
            [poly(0, 0, 1), poly(0, 1), poly(1, -1, -1)],
        ]
        x = solve_stationary_exact(T)
        total = x[0] + x[1] + x[2]
        assert total.num == poly(1) and total.den == poly(1)
        # stationarity: for each column j, sum_i x_i T[i][j] == x_j
        for j in range(3):
            acc = EpsRatFunc(EpsPoly.zero())
            for i in range(3):
                acc = acc + x[i] * EpsRatFunc(T[i][j])
            assert acc == x[j]

    def test_rejects_non_stochastic_rows(self):
        T = [[poly(1), poly(0, 1)], [poly(0, 1), poly(1, -1)]]
        with pytest.raises(ValueError):
            solve_stationary_exact(T)

    def test_singular_system_reported(self):
        # permutation chain pair that is reducible for every eps
        T = [
            [poly(1), EpsPoly.zero(), EpsPoly.zero()],
            [EpsPoly.zero(), poly(1), EpsPoly.zero()],
            [EpsPoly.zero(), EpsPoly.zero(), poly(1)],
        ]
        with pytest.raises(ExactSolveError):
            solve_stationary_exact(T)


def test_taylor_ratio_handles_common_valuation():
    assert taylor_ratio([0, 0, 3], [0, 6], 2) == (0, Fraction(1, 2), 0)
    with pytest.raises(ValueError):
        taylor_ratio([1], [0, 1], 1)
