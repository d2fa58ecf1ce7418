import math
import random
from fractions import Fraction

import pytest

from quarticlab.errors import InvalidArgument, UnsupportedDomain
from quarticlab.exact import algebraic_roots
from quarticlab.heights import (canonical_height, isogeny_height_delta, mahler_height, naive_height,
                                parallelogram_residual, remond_constant, symmetrized_canonical_height,
                                torsion_order_bound, x_height)
from quarticlab.weierstrass import EllipticPoint, WeierstrassFiber, torsion_order

F = Fraction


def curve(a1, a2, a3, a4, a6):
    return WeierstrassFiber(*(F(v) for v in (a1, a2, a3, a4, a6)))


# classical torsion points; every order is re-certified below by torsion_order
TORSION = [
    (curve(0, 0, 0, 0, 1), [(2, 3), (2, -3), (0, 1), (0, -1), (-1, 0)]),
    (curve(0, 0, 0, -1, 0), [(0, 0), (1, 0), (-1, 0)]),
    (curve(0, 0, 0, -43, 166), [(3, 8), (3, -8), (-5, 16), (-5, -16), (11, 32), (11, -32)]),
    (curve(0, -1, 1, 0, 0), [(0, 0), (0, -1), (1, 0), (1, -1)]),
    (curve(0, 0, 0, 0, 4), [(0, 2), (0, -2)]),
]


def torsion_points():
    for E, pts in TORSION:
        for x, y in pts:
            yield E, EllipticPoint(F(x), F(y))


def test_twenty_certified_torsion_points():
    pts = list(torsion_points())
    assert len(pts) == 20
    for E, P in pts:
        assert torsion_order(E, P, 12) is not None


@pytest.mark.parametrize("E,P", list(torsion_points()))
def test_canonical_height_vanishes_on_torsion(E, P):
    h = canonical_height(E, P, 1e-10)
    assert abs(h.value) < 1e-8


def test_canonical_height_positive_off_torsion():
    E = curve(0, 0, 0, -2, 0)
    P = EllipticPoint(F(2), F(2))
    assert canonical_height(E, P).value > 0.1


def test_naive_heights():
    assert naive_height([F(1, 2), F(3)]).value == pytest.approx(math.log(6))
    assert x_height(EllipticPoint(F(-5, 4), F(3, 8))) == pytest.approx(math.log(5))
    sqrt2 = algebraic_roots([-2, 0, 1])[1]
    assert mahler_height(sqrt2).value == pytest.approx(math.log(2) / 2, abs=1e-12)
    golden = algebraic_roots([-1, -1, 1])[1]
    assert mahler_height(golden).value == pytest.approx(math.log((1 + 5 ** 0.5) / 2) / 2, abs=1e-12)


def test_naive_height_rejects_numeric():
    from quarticlab.exact import ComplexApprox

    with pytest.raises(UnsupportedDomain):
        naive_height([ComplexApprox(1), ComplexApprox(2)])


def sample_multiples(fam1, ts, kmax=3):
    out = []
    for t in ts:
        E = fam1.chart0.fiber(t)
        if E.is_singular():
            continue
        s = fam1.chart0.section(t)
        out.append((E, [E.mul(k, s) for k in range(1, kmax + 1)]))
    return out


def test_quadratic_scaling_on_sample_fibers(fam1):
    for E, (P, P2, _) in sample_multiples(fam1, [F(0), F(1), F(-1, 2)]):
        h1 = canonical_height(E, P, 1e-10).value
        h2 = canonical_height(E, P2, 1e-10).value
        assert abs(h2 - 4 * h1) < 1e-6


def test_parallelogram_on_sample_fibers(fam1):
    rng = random.Random(7)
    for E, mults in sample_multiples(fam1, [F(1), F(2, 3)]):
        P, Q = rng.sample(mults, 2)
        assert abs(parallelogram_residual(E, P, Q).value) < 1e-6


def test_symmetrized_default_naive():
    E, P = curve(0, 0, 0, -2, 0), EllipticPoint(F(2), F(2))
    hm, h1, h2 = symmetrized_canonical_height(E, P)
    assert h1.value == 0 and hm.value == pytest.approx(canonical_height(E, P).value, abs=1e-9)


def test_literal_limit_agrees():
    E, P = curve(0, 0, 0, -2, 0), EllipticPoint(F(2), F(2))
    literal = canonical_height(E, P, 1e-3, naive=x_height)
    assert abs(literal.value - canonical_height(E, P).value) < 1e-2


def test_bounds():
    rep = torsion_order_bound(1, 1, 0)
    # base 14^64, exponent 35840 / 16 = 2240
    assert rep.exponent == 2240
    assert rep.log10 == pytest.approx(2240 * 64 * math.log10(14), abs=0.5)
    assert remond_constant(1) == 6720
    assert isogeny_height_delta(4) == pytest.approx(math.log(2))
    with pytest.raises(InvalidArgument):
        torsion_order_bound(0, 1, 0)
    # monotone in the height term once it dominates
    assert torsion_order_bound(1, 1, 5).log10 > torsion_order_bound(1, 1, 2).log10


def test_bound_exact_and_float_agree():
    for args in [(1, 1, 0), (1, 48, 0.9), (2, 3, 1.5)]:
        rep = torsion_order_bound(*args)
        assert rep.log10_from_integer() == pytest.approx(rep.log10, rel=1e-12)
