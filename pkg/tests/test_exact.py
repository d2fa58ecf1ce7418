from fractions import Fraction

import mpmath
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from quarticlab.errors import InvalidArgument
from quarticlab.exact import (ComplexApprox, MultiPoly, NumberFieldElement, algebraic_roots, isolate_roots,
                              resultant, to_fraction)

fractions = st.fractions(max_denominator=50).filter(lambda f: abs(f) < 1000)
small = st.integers(-6, 6)


def upoly(coeffs):
    return MultiPoly.from_univariate([Fraction(c) for c in coeffs])


def test_resultant_examples():
    assert resultant(upoly([-2, 0, 1]), upoly([-3, 0, 1])) == 1
    f = upoly([1, 2, 3])
    assert resultant(f, f) == 0


def test_resultant_linear_sign_convention():
    # Sylvester determinant with f in the top rows: res(x - a, x - b) = a - b
    a, b = Fraction(2), Fraction(7)
    assert resultant(upoly([-a, 1]), upoly([-b, 1])) == a - b


def test_resultant_zero_input():
    with pytest.raises(InvalidArgument):
        resultant(MultiPoly({}, 1), upoly([1, 1]))


def test_bivariate_resultant_matches_sympy():
    x, y = MultiPoly.gens(2)
    f = x * x + y * y - 1
    g = x - y
    r = resultant(f, g, var=0)
    X, Y = sympy.symbols("X Y")
    ref = sympy.Poly(sympy.resultant(X ** 2 + Y ** 2 - 1, X - Y, X), Y)
    assert r.univariate_coeffs() == [Fraction(int(c)) for c in reversed(ref.all_coeffs())]


@settings(max_examples=300, deadline=None)
@given(st.lists(small, min_size=2, max_size=4), st.lists(small, min_size=2, max_size=4))
def test_resultant_vanishes_iff_common_factor(fc, gc):
    if fc[-1] == 0 or gc[-1] == 0:
        return
    t = sympy.Symbol("t")
    fs = sum(c * t ** k for k, c in enumerate(fc))
    gs = sum(c * t ** k for k, c in enumerate(gc))
    common = sympy.degree(sympy.gcd(fs, gs), t) > 0
    assert (resultant(upoly(fc), upoly(gc)) == 0) == common


@given(fractions, fractions)
def test_rational_arithmetic_exact(a, b):
    assert (a + b) - b == a
    assert to_fraction(a) == a


def disc_contains_zero(coeffs, c, r):
    """|f(c)| <= sum_k |f^(k)(c)| r^k / k!: the disc image of f contains 0 only if this holds."""
    with mpmath.workdps(60):
        c = mpmath.mpc(c)
        derivs = mpmath.diffs(lambda z: mpmath.polyval(list(reversed(coeffs)), z), c, len(coeffs))
        d = list(derivs)
        spread = sum(abs(d[k]) * mpmath.mpf(r) ** k / mpmath.factorial(k) for k in range(1, len(d)))
        return abs(d[0]) <= spread + mpmath.mpf(10) ** -40


def test_isolate_roots_examples():
    roots = isolate_roots([1, 0, 1], 1e-10)
    vals = sorted((complex(r.center) for r in roots), key=lambda z: z.imag)
    assert abs(vals[0] + 1j) < 1e-10 and abs(vals[1] - 1j) < 1e-10
    triple = isolate_roots([-1, 3, -3, 1], 1e-10)
    assert len(triple) == 1 and triple[0].multiplicity == 3 and triple[0].as_fraction() == 1
    real = [r for r in isolate_roots([-1, -1, 0, 1], 1e-12) if r.is_real()]
    # bisection oracle for x^3 - x - 1
    lo, hi = mpmath.mpf(1), mpmath.mpf(2)
    for _ in range(80):
        mid = (lo + hi) / 2
        if mid ** 3 - mid - 1 > 0:
            hi = mid
        else:
            lo = mid
    assert len(real) == 1 and abs(complex(real[0].center) - float(lo)) < 1e-11


def test_isolate_roots_bad_precision():
    with pytest.raises(InvalidArgument):
        isolate_roots([1, 1], 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(small, min_size=2, max_size=6))
def test_root_isolation_complete(coeffs):
    if not any(coeffs[1:]) or coeffs[-1] == 0:
        return
    roots = isolate_roots(coeffs, 1e-12)
    assert sum(r.multiplicity for r in roots) == len(coeffs) - 1
    for r in roots:
        assert r.radius <= 1e-12
        assert disc_contains_zero(list(r.minpoly), r.center, r.radius)


def test_designation_survives_refinement():
    roots = algebraic_roots([-2, 0, 0, 1], 1e-8)
    before = [(r.index, complex(r.center)) for r in roots]
    for r, (idx, c) in zip(roots, before):
        fine = r.refine(1e-25)
        assert fine.index == idx and abs(complex(fine.center) - c) < 1e-7


def test_complex_approx_error_propagates():
    with mpmath.workdps(30):
        a = ComplexApprox(mpmath.mpc(1, 1), mpmath.mpf("1e-20"))
        b = a * a - ComplexApprox(mpmath.mpc(0, 2))
        assert b.contains_zero() and b.err > 0


def test_number_field_arithmetic():
    alpha = algebraic_roots([-2, 0, 1])[1]  # sqrt(2)
    s = NumberFieldElement.generator(alpha)
    assert (s * s - 2).is_zero()
    inv = 1 / (s + 1)
    assert ((s + 1) * inv - 1).is_zero()
    assert abs(complex(s) - 2 ** 0.5) < 1e-15
