import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quarticlab.errors import InvalidPoint, MarkedPointSingular, UnsupportedDomain
from quarticlab.exact import ComplexApprox
from quarticlab.weierstrass import (INFINITY, EllipticPoint, WeierstrassFiber, add_points, cubic_eval,
                                    division_polynomial, nagell_transform, scalar_mul, singular_fibers,
                                    torsion_order, torsion_value_data, torsion_value_polynomial)

F = Fraction
E1 = WeierstrassFiber.short(F(0), F(1))  # y^2 = x^3 + 1
P6 = EllipticPoint(F(2), F(3))


def test_group_law_examples():
    assert add_points(E1, P6, P6) == EllipticPoint(F(0), F(1))
    assert add_points(E1, P6, INFINITY) == P6
    assert add_points(E1, P6, E1.neg(P6)).is_infinity


def test_scalar_multiples():
    # brute-force oracle: repeated addition
    Q = INFINITY
    for k in range(7):
        assert scalar_mul(E1, k, P6) == Q
        Q = add_points(E1, Q, P6)
    assert scalar_mul(E1, 3, P6) == EllipticPoint(F(-1), F(0))
    assert scalar_mul(E1, -1, P6) == E1.neg(P6)


def test_torsion_order_examples():
    assert torsion_order(E1, P6, 12) == 6
    assert torsion_order(E1, INFINITY, 12) == 1
    E = WeierstrassFiber.short(F(-2), F(0))  # y^2 = x^3 - 2x, (2, 2) has infinite order
    assert torsion_order(E, EllipticPoint(F(2), F(2)), 12) is None


def test_torsion_order_numeric_refused():
    E = WeierstrassFiber.short(ComplexApprox(0), ComplexApprox(1))
    with pytest.raises(UnsupportedDomain):
        torsion_order(E, EllipticPoint(ComplexApprox(2), ComplexApprox(3)))


def test_off_curve_point():
    with pytest.raises(InvalidPoint):
        add_points(E1, EllipticPoint(F(1), F(1)), P6)


def test_short_discriminant():
    assert WeierstrassFiber.short(F(0), F(1)).discriminant == -432


def test_division_polynomial_roots_are_torsion_x():
    # psi_3 of y^2 = x^3 + 1 vanishes at x = 0 (3-torsion (0, 1))
    import sympy

    x = sympy.Symbol("x")
    psi3 = division_polynomial(0, 1, 3)
    assert sympy.expand(psi3 - (3 * x ** 4 + 12 * x)) == 0
    assert psi3.subs(x, 0) == 0
    assert torsion_order(E1, EllipticPoint(F(0), F(1))) == 3
    # psi_6 vanishes at the x-coordinate of the 6-torsion point (2, 3)
    psi6 = division_polynomial(0, 1, 6)
    assert psi6.subs({x: 2, sympy.Symbol("y"): 3}) == 0


def test_nagell_flex_example():
    # y^2 z = x^3 + z^3 with O = (0:1:0), a flex
    C = {(0, 2, 1): F(1), (3, 0, 0): F(-1), (0, 0, 3): F(-1)}
    E = nagell_transform(C, (F(0), F(1), F(0)))
    assert not E.is_singular()
    P = E.transform.from_cubic((F(2), F(3), F(1)))
    assert E.contains(P)
    assert E.transform.to_cubic(INFINITY) == (F(0), F(1), F(0))


def test_nagell_singular_marked_point():
    # nodal cubic y^2 z = x^3 + x^2 z, node at (0:0:1)
    C = {(0, 2, 1): F(1), (3, 0, 0): F(-1), (2, 0, 1): F(-1)}
    with pytest.raises(MarkedPointSingular):
        nagell_transform(C, (F(0), F(0), F(1)))


def _fiber(fam, t):
    cf = fam.cubics[0]
    C = cf.at(t)
    return cf, C, nagell_transform(C, cf.zero_point(t))


def test_round_trip_on_sample_fibers(fam1):
    rng = random.Random(7)
    done = 0
    while done < 20:
        t = F(rng.randint(-9, 9), rng.randint(1, 4))
        cf, C, E = _fiber(fam1, t)
        if E.is_singular():
            continue
        S = E.transform.from_cubic(cf.section_point(t))
        P = E.mul(rng.randint(1, 3), S)
        q = E.transform.to_cubic(P)
        assert cubic_eval(C, q) == 0
        assert E.transform.from_cubic(q) == P
        assert E.transform.to_cubic(E.transform.from_cubic(q)) is not None
        done += 1


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=-10, max_value=10, max_denominator=6))
def test_section_on_model_identically(fam1, t):
    model = fam1.chart0
    E = model.fiber(t)
    assert E.contains(model.section(t))


def test_singular_fibers_sample(fam1, fam2):
    for fam in (fam1, fam2):
        loc = singular_fibers(fam)
        assert loc.count == 24 and all(m == 1 for m in loc.multiplicities)


def test_torsion_value_polynomials(fam1):
    data = torsion_value_data(fam1, 4)
    assert [d.m for d in data] == [1, 2, 3, 4]
    # T_2 | T_4 and the primitive part of T_4 drops the order-2 values
    assert len(data[3].poly) - 1 == 30 and len(data[3].primitive) - 1 == 24
    T2 = torsion_value_polynomial(fam1, None, 2)
    assert T2.degree() == 6


def test_torsion_values_are_torsion(fam1):
    # at a root of T_2 the section is 2-torsion: 2 sigma = O numerically
    from quarticlab.weierstrass import torsion_values

    r = torsion_values(fam1, 2)[0]
    import mpmath
    with mpmath.workdps(40):
        t = r.approx(40)
        P = fam1.chart0.section(t)
        assert P.y.contains_zero()
