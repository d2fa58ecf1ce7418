from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quarticlab.betti import (BettiPoint, RationalHit, betti_coords, count_rational_points, detect_rational,
                              elliptic_exp, elliptic_log, jacobian_rank, lattice_invariants, period_lattice)
from quarticlab.errors import InvalidArgument
from quarticlab.weierstrass import EllipticPoint, WeierstrassFiber

F = Fraction
E_SQ = WeierstrassFiber.short(F(-1), F(0))  # y^2 = x^3 - x


def quadrature_period():
    # independent route: 2 * int_1^oo dx / sqrt(x^3 - x)
    with mpmath.workdps(30):
        return 2 * mpmath.quad(lambda x: 1 / mpmath.sqrt(x ** 3 - x), [1, 2, mpmath.inf])


def test_real_period_matches_quadrature():
    lat = period_lattice(E_SQ)
    q = quadrature_period()
    assert abs(lat.real_period - q) < 1e-9
    assert abs(float(q) - 5.2441151086) < 1e-9


def test_square_lattice_ratio():
    lat = period_lattice(E_SQ)
    tau = complex(lat.tau)
    # reduced basis: tau is i up to the sign of the real direction
    assert abs(abs(tau) - 1) < 1e-9 and abs(tau.real) < 1e-9


def test_lattice_invariants_round_trip():
    E = WeierstrassFiber.short(F(2), F(-3))
    with mpmath.workdps(30):
        lat = period_lattice(E)
        g2, g3 = lattice_invariants(lat.w1.value / 2, lat.w2.value / 2)
        assert abs(g2 - (-4 * 2)) < 1e-15 and abs(g3 - 12) < 1e-15


def test_two_torsion_is_half_period():
    lat = period_lattice(E_SQ)
    for x in (0, 1, -1):
        u = elliptic_log(E_SQ, EllipticPoint(F(x), F(0)), lat)
        b = betti_coords(u, lat)
        hit = detect_rational(b, 4)
        assert hit is not None and hit.q == 2


def test_log_exp_round_trip():
    E = WeierstrassFiber.short(F(0), F(1))
    P = EllipticPoint(F(2), F(3))
    lat = period_lattice(E)
    u = elliptic_log(E, P, lat)
    Q = elliptic_exp(u, lat, E)
    assert abs(complex(Q.x) - 2) < 1e-10 and abs(complex(Q.y) - 3) < 1e-10
    b = betti_coords(u, lat)
    hit = detect_rational(b, 6)
    assert hit is not None and hit.q == 6


def test_detect_rational_examples():
    assert detect_rational(BettiPoint(0.5, 0.25, 1e-9, 1e-9), 6) == RationalHit(2, 1, 4)
    assert detect_rational(BettiPoint(0.31415926, 0.1, 1e-9, 1e-9), 6) is None
    # error box too wide: two candidates
    assert detect_rational(BettiPoint(0.5, 0.5, 0.2, 0.2), 6) is None
    with pytest.raises(InvalidArgument):
        detect_rational(BettiPoint(0, 0), 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 9), st.integers(0, 8), st.integers(0, 8))
def test_detect_rational_recovers_fractions(q, p1, p2):
    c = (F(p1, q) % 1, F(p2, q) % 1)
    hit = detect_rational(BettiPoint(float(c[0]), float(c[1]), 1e-12, 1e-12), 9)
    assert hit is not None and hit.coords == c


def test_count_rational_points():
    pts = [BettiPoint(0.5, 0.0, 1e-12, 1e-12), BettiPoint(0.5, 1e-13, 1e-12, 1e-12),
           BettiPoint(1 / 3, 2 / 3, 1e-12, 1e-12), BettiPoint(0.123456789, 0.5, 1e-12, 1e-12)]
    assert count_rational_points(pts, 2, 6) == 1
    assert count_rational_points(pts, 3, 6) == 2
    with pytest.raises(InvalidArgument):
        count_rational_points(pts, 5, 3)


def test_betti_map_is_submersive(fam1):
    rank, _ = jacobian_rank(fam1, 0.3 + 0.2j)
    assert rank == 2
