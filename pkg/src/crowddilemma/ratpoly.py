"""Exact univariate arithmetic in the error rate eps.

Payoffs of the iterated game at fixed rational (d, q) are ratios of
polynomials in eps with exact rational coefficients.  Everything that makes
the limit eps -> 0+ rigorous lives here: dense polynomials, normalized
rational functions, Taylor (series-division) coefficients, lowest-order
sign queries, and an exact stationary solver based on fraction-free
(Bareiss) elimination over the polynomial ring.

Coefficients are Python ints or Fractions; arithmetic never leaves exact
rationals.  The low-level kernels work on plain coefficient lists (index =
power of eps) and are shared by the public classes and the hot paths in the
Markov engine.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Optional, Sequence, Union

Coeff = Union[int, Fraction]
CoeffList = list  # list of Coeff, index = power of eps


class ExactSolveError(ArithmeticError):
    """The exact linear system was singular for all eps (cannot happen for
    transition matrices built from valid strategies)."""


# ---------------------------------------------------------------------------
# list-based kernels

def _trim(p: CoeffList) -> CoeffList:
    while p and p[-1] == 0:
        p.pop()
    return p

def _add(a: Sequence[Coeff], b: Sequence[Coeff]) -> CoeffList:
    out = [0] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)

def _sub(a: Sequence[Coeff], b: Sequence[Coeff]) -> CoeffList:
    out = [0] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] -= c
    return _trim(out)

def _mul(a: Sequence[Coeff], b: Sequence[Coeff]) -> CoeffList:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return _trim(out)

def _scale(a: Sequence[Coeff], c: Coeff) -> CoeffList:
    if c == 0:
        return []
    return _trim([x * c for x in a])

def _lowest(p: Sequence[Coeff]) -> Optional[tuple[int, Coeff]]:
    for i, c in enumerate(p):
        if c:
            return i, c
    return None

def _eval(p: Sequence[Coeff], x):
    v = 0
    for c in reversed(p):
        v = v * x + c
    return v

def _divexact(a: Sequence[Coeff], b: Sequence[Coeff]) -> CoeffList:
    """Quotient a/b when the division is exact; raises otherwise."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if not a:
        return []
    rem = list(a)
    db, lb = len(b) - 1, b[-1]
    if len(rem) - 1 < db:
        raise ArithmeticError("non-exact polynomial division")
    quot = [0] * (len(rem) - db)
    for i in range(len(rem) - 1, db - 1, -1):
        c = rem[i]
        if c == 0:
            continue
        if isinstance(c, int) and isinstance(lb, int):
            qc, r = divmod(c, lb)
            if r:
                raise ArithmeticError("non-exact polynomial division")
        else:
            qc = Fraction(c) / lb
        quot[i - db] = qc
        for j, y in enumerate(b):
            if y:
                rem[i - db + j] -= qc * y
    if any(rem):
        raise ArithmeticError("non-exact polynomial division")
    return _trim(quot)


def _divexact_int(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """_divexact restricted to integer polynomials (hot path of the exact
    stationary solver, where Bareiss guarantees exactness)."""
    if not a:
        return []
    rem = list(a)
    db = len(b) - 1
    lb = b[-1]
    quot = [0] * (len(rem) - db)
    for i in range(len(rem) - 1, db - 1, -1):
        c = rem[i]
        if c == 0:
            continue
        qc = c // lb
        if qc * lb != c:
            raise ArithmeticError("non-exact polynomial division")
        quot[i - db] = qc
        base = i - db
        for j, y in enumerate(b):
            if y:
                rem[base + j] -= qc * y
    if any(rem):
        raise ArithmeticError("non-exact polynomial division")
    return _trim(quot)

def _monic_mod(a: CoeffList, b: CoeffList) -> CoeffList:
    """Remainder of a mod b over the rationals."""
    rem = [Fraction(c) for c in a]
    db, lb = len(b) - 1, Fraction(b[-1])
    while len(rem) - 1 >= db and any(rem):
        _trim(rem)
        if len(rem) - 1 < db:
            break
        qc = rem[-1] / lb
        shift = len(rem) - 1 - db
        for j, y in enumerate(b):
            if y:
                rem[shift + j] -= qc * y
        rem.pop()
    return _trim(rem)

def _poly_gcd(a: Sequence[Coeff], b: Sequence[Coeff]) -> CoeffList:
    """Monic gcd over the rationals (empty list for gcd(0, 0))."""
    a, b = list(a), list(b)
    while b:
        a, b = b, _monic_mod(a, b)
    if not a:
        return []
    lead = Fraction(a[-1])
    return _trim([Fraction(c) / lead for c in a])

def _clear_denominators(p: Sequence[Coeff]) -> tuple[CoeffList, int]:
    """Scale to integer coefficients; returns (int poly, multiplier used)."""
    mult = 1
    for c in p:
        if isinstance(c, Fraction) and c.denominator != 1:
            mult = lcm(mult, c.denominator)
    return [int(c * mult) for c in p], mult

def _content(p: Sequence[int]) -> int:
    g = 0
    for c in p:
        g = gcd(g, abs(c))
    return g or 1


# ---------------------------------------------------------------------------
# public polynomial / rational-function types

def _coerce_coeffs(coeffs: Iterable[Coeff]) -> tuple[Coeff, ...]:
    out = []
    for c in coeffs:
        if isinstance(c, Fraction):
            out.append(int(c) if c.denominator == 1 else c)
        elif isinstance(c, int):
            out.append(c)
        else:
            raise TypeError(f"coefficients must be int or Fraction, got {type(c)}")
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


class EpsPoly:
    """Dense polynomial in eps with exact rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Coeff] = ()):
        object.__setattr__(self, "coeffs", _coerce_coeffs(coeffs))

    def __setattr__(self, name, value):
        raise AttributeError("EpsPoly is immutable")

    @classmethod
    def zero(cls) -> "EpsPoly":
        return cls(())

    @classmethod
    def one(cls) -> "EpsPoly":
        return cls((1,))

    @classmethod
    def eps(cls, power: int = 1) -> "EpsPoly":
        return cls([0] * power + [1])

    @classmethod
    def constant(cls, c: Coeff) -> "EpsPoly":
        return cls((c,))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def lowest_order(self) -> Optional[tuple[int, Fraction]]:
        """(order, coefficient) of the lowest-order nonzero term; None if zero."""
        lo = _lowest(self.coeffs)
        if lo is None:
            return None
        return lo[0], Fraction(lo[1])

    def __add__(self, other: "EpsPoly") -> "EpsPoly":
        return EpsPoly(_add(self.coeffs, other.coeffs))

    def __sub__(self, other: "EpsPoly") -> "EpsPoly":
        return EpsPoly(_sub(self.coeffs, other.coeffs))

    def __mul__(self, other) -> "EpsPoly":
        if isinstance(other, EpsPoly):
            return EpsPoly(_mul(self.coeffs, other.coeffs))
        return EpsPoly(_scale(self.coeffs, other))

    __rmul__ = __mul__

    def __neg__(self) -> "EpsPoly":
        return EpsPoly([-c for c in self.coeffs])

    def __call__(self, x):
        return _eval(self.coeffs, x)

    def __eq__(self, other) -> bool:
        if isinstance(other, EpsPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __repr__(self) -> str:
        return f"EpsPoly({self})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            mag = c if c > 0 else -c
            term = "eps" if k == 1 else f"eps^{k}"
            if k == 0:
                body = str(mag)
            elif mag == 1:
                body = term
            else:
                body = f"{mag}*{term}"
            parts.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


class EpsRatFunc:
    """Ratio of eps-polynomials, normalized so that

    * numerator and denominator are coprime with common eps powers cancelled,
    * the denominator has integer, content-free coefficients, and
    * the denominator's lowest-order nonzero coefficient is positive,

    so the sign of the function as eps -> 0+ is the sign of the numerator's
    lowest-order coefficient.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: EpsPoly, den: EpsPoly = EpsPoly((1,))):
        if den.is_zero():
            raise ZeroDivisionError("denominator is identically zero")
        n, d = _normalize_ratio(list(num.coeffs), list(den.coeffs))
        object.__setattr__(self, "num", EpsPoly(n))
        object.__setattr__(self, "den", EpsPoly(d))

    def __setattr__(self, name, value):
        raise AttributeError("EpsRatFunc is immutable")

    @classmethod
    def from_coeffs(cls, num: Iterable[Coeff], den: Iterable[Coeff] = (1,)) -> "EpsRatFunc":
        return cls(EpsPoly(num), EpsPoly(den))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other: "EpsRatFunc") -> "EpsRatFunc":
        n = _add(_mul(self.num.coeffs, other.den.coeffs),
                 _mul(other.num.coeffs, self.den.coeffs))
        return EpsRatFunc(EpsPoly(n), EpsPoly(_mul(self.den.coeffs, other.den.coeffs)))

    def __sub__(self, other: "EpsRatFunc") -> "EpsRatFunc":
        n = _sub(_mul(self.num.coeffs, other.den.coeffs),
                 _mul(other.num.coeffs, self.den.coeffs))
        return EpsRatFunc(EpsPoly(n), EpsPoly(_mul(self.den.coeffs, other.den.coeffs)))

    def __mul__(self, other) -> "EpsRatFunc":
        if isinstance(other, EpsRatFunc):
            return EpsRatFunc(self.num * other.num, self.den * other.den)
        return EpsRatFunc(self.num * other, self.den)

    __rmul__ = __mul__

    def __neg__(self) -> "EpsRatFunc":
        return EpsRatFunc(-self.num, self.den)

    def __eq__(self, other) -> bool:
        if isinstance(other, EpsRatFunc):
            # Normal forms are canonical, so structural equality suffices.
            return self.num.coeffs == other.num.coeffs and self.den.coeffs == other.den.coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.num.coeffs, self.den.coeffs))

    def __call__(self, x):
        dv = self.den(x)
        nv = self.num(x)
        if isinstance(x, Fraction):
            return Fraction(nv, 1) / dv
        return nv / dv

    def sign_near_zero(self) -> int:
        """Sign of the function as eps -> 0+: -1, 0 or +1."""
        lo = self.num.lowest_order()
        if lo is None:
            return 0
        return 1 if lo[1] > 0 else -1

    def taylor(self, order: int) -> tuple[Fraction, ...]:
        """Exact series coefficients c_0..c_order about eps = 0."""
        den = self.den.coeffs
        if not den or den[0] == 0:
            raise ValueError("function has a pole at eps = 0")
        return taylor_ratio(self.num.coeffs, den, order)

    def limit_at_zero(self) -> Fraction:
        """Value of the function at eps = 0 (exists whenever there is no pole)."""
        return self.taylor(0)[0]

    def __repr__(self) -> str:
        return f"EpsRatFunc(({self.num}) / ({self.den}))"

    def __str__(self) -> str:
        if self.den == EpsPoly((1,)):
            return str(self.num)
        return f"({self.num}) / ({self.den})"


def _normalize_ratio(num: CoeffList, den: CoeffList) -> tuple[CoeffList, CoeffList]:
    num, den = _trim(num), _trim(den)
    if not num:
        return [], [1]
    # cancel the common power of eps
    vn = _lowest(num)[0]
    vd = _lowest(den)[0]
    v = min(vn, vd)
    if v:
        num, den = num[v:], den[v:]
    g = _poly_gcd(num, den)
    if len(g) > 1:
        num, den = _divexact(num, g), _divexact(den, g)
    # make the denominator integral, content-free, lowest coefficient positive
    den_int, mult = _clear_denominators(den)
    cont = _content(den_int)
    num = [c * Fraction(mult, cont) for c in num]
    den = [c // cont for c in den_int]
    if _lowest(den)[1] < 0:
        num = [-c for c in num]
        den = [-c for c in den]
    return [int(c) if c.denominator == 1 else c for c in map(Fraction, num)], den


def taylor_ratio(num: Sequence[Coeff], den: Sequence[Coeff], order: int) -> tuple[Fraction, ...]:
    """Series coefficients of num/den about 0, cancelling common eps powers."""
    lo_n, lo_d = _lowest(num), _lowest(den)
    if lo_d is None:
        raise ZeroDivisionError("denominator is identically zero")
    if lo_n is None:
        return tuple(Fraction(0) for _ in range(order + 1))
    v = lo_d[0]
    if lo_n[0] < v:
        raise ValueError("function has a pole at eps = 0")
    num, den = list(num[v:]), list(den[v:])
    b0 = Fraction(den[0])
    out = []
    for k in range(order + 1):
        acc = Fraction(num[k]) if k < len(num) else Fraction(0)
        for j in range(1, k + 1):
            bj = den[j] if j < len(den) else 0
            if bj:
                acc -= bj * out[k - j]
        out.append(acc / b0)
    return tuple(out)


# ---------------------------------------------------------------------------
# exact linear solving

def _bareiss_solve(aug: list[list[CoeffList]]) -> tuple[list[CoeffList], CoeffList]:
    """Solve a k x k integer-polynomial system given as k rows of k+1
    augmented entries.  Returns (numerators, common denominator) with the
    denominator equal to the system determinant up to sign.
    """
    k = len(aug)
    prev: CoeffList = [1]
    for p in range(k - 1):
        if not aug[p][p]:
            for r in range(p + 1, k):
                if aug[r][p]:
                    aug[p], aug[r] = aug[r], aug[p]
                    break
            else:
                raise ExactSolveError("singular system: zero pivot column")
        piv = aug[p][p]
        one_prev = prev == [1]
        for r in range(p + 1, k):
            arp = aug[r][p]
            row_r, row_p = aug[r], aug[p]
            for c in range(p + 1, k + 1):
                t = _sub(_mul(piv, row_r[c]), _mul(arp, row_p[c]))
                row_r[c] = t if one_prev else _divexact_int(t, prev)
            row_r[p] = []
        prev = piv
    den = aug[k - 1][k - 1]
    if not den:
        raise ExactSolveError("singular system: zero determinant")
    nums: list[CoeffList] = [[] for _ in range(k)]
    nums[k - 1] = aug[k - 1][k]
    for i in range(k - 2, -1, -1):
        acc = _mul(aug[i][k], den)
        for j in range(i + 1, k):
            acc = _sub(acc, _mul(aug[i][j], nums[j]))
        nums[i] = _divexact_int(acc, aug[i][i])
    return nums, den


def solve_stationary_exact(transition: Sequence[Sequence[EpsPoly]]) -> list[EpsRatFunc]:
    """Exact stationary distribution of a row-stochastic polynomial matrix.

    Each row must sum to the constant polynomial 1 and the chain must be
    irreducible for small eps > 0.  The returned vector x satisfies
    x^T T = x^T and sum(x) = 1 as identities of rational functions.
    """
    k = len(transition)
    one = EpsPoly((1,))
    for i, row in enumerate(transition):
        if len(row) != k:
            raise ValueError("transition matrix must be square")
        total = EpsPoly.zero()
        for entry in row:
            total = total + entry
        if total != one:
            raise ValueError(f"row {i} does not sum to 1 as a polynomial")
    # Equations: for j < k-1, sum_i x_i T[i][j] - x_j = 0.  The dropped
    # equation is redundant (the k column equations sum to zero); the last
    # row enforces normalization sum(x) = 1.
    aug: list[list[CoeffList]] = []
    for j in range(k - 1):
        row = []
        for i in range(k):
            e = list(transition[i][j].coeffs)
            if i == j:
                e = _sub(e, [1])
            row.append(e)
        row.append([])
        ints, _ = _clear_row_denominators(row)
        aug.append(ints)
    aug.append([[1] for _ in range(k + 1)])
    nums, den = _bareiss_solve(aug)
    return [EpsRatFunc(EpsPoly(n), EpsPoly(den)) for n in nums]


def _clear_row_denominators(row: list[CoeffList]) -> tuple[list[CoeffList], int]:
    mult = 1
    for entry in row:
        for c in entry:
            if isinstance(c, Fraction) and c.denominator != 1:
                mult = lcm(mult, c.denominator)
    if mult == 1:
        return [[int(c) for c in e] for e in row], 1
    return [[int(c * mult) for c in e] for e in row], mult
