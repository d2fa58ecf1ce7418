import math
from fractions import Fraction

import mpmath
import pytest

from quarticlab import dynamics as D
from quarticlab.errors import InvalidArgument, InvalidPoint
from quarticlab.exact import ComplexApprox, NumberFieldElement

F = Fraction


def on_m(S, s):
    """The point (s : 1 : s : 1) of the line M."""
    return D.SurfacePoint.make(S, (F(s), F(1), F(s), F(1)))


def test_point_membership(sample):
    p = on_m(sample, 2)
    assert p.f1 == 2 and p.f2 == 2 and p.is_exact
    with pytest.raises(InvalidPoint):
        D.SurfacePoint.make(sample, (F(1), F(2), F(3), F(5)))


def test_translation_preserves_its_fibration(sample):
    p = on_m(sample, F(1, 2))
    for which in (1, 2):
        q = D.translate(p, which)
        assert (q.f1 if which == 1 else q.f2) == (p.f1 if which == 1 else p.f2)
        assert sample.F.evaluate(q.coords) == 0


def test_translate_zero_point_gives_section(sample):
    for which in (1, 2):
        b = F(3, 2)
        z = D.zero_point_on_surface(sample, which, b)
        s = D.section_point_on_surface(sample, which, b)
        assert D.translate(z, which).same_as(s)


def test_order_two_at_infinity_closes(sample):
    # sigma_2 has order 2 on the fiber f_2 = infinity (plane y = 0)
    z = D.zero_point_on_surface(sample, 2, None)
    assert z.f2 is None
    p = D.translate(z, 2)
    assert not p.same_as(z)
    assert D.translate(p, 2).same_as(z)


def test_exact_torsion_column_in_number_field(sample):
    tv = D.torsion_value_list(sample, 1, 2)[0]
    assert tv.order == 2
    a = NumberFieldElement.generator(tv.value)
    p = D.SurfacePoint.make(sample, (a, 1, a, 1))
    q = D.translate(p, 1)
    assert not q.same_as(p)
    assert D.translate(q, 1).same_as(p)


def test_numeric_return_at_torsion_value(sample):
    with mpmath.workdps(40):
        for tv in D.torsion_value_list(sample, 2, 3)[:4]:
            b = tv.approx(40)
            for p in D.line_points(sample, ComplexApprox(mpmath.mpf("0.37")), b):
                q = D.translate_power(p, 2, tv.order)
                assert q.same_as(p, 1e-8)


def test_orbit_grid_origin_and_columns(sample):
    p = on_m(sample, F(1, 3))
    rec = D.orbit_grid(p, 2, 2)
    assert rec.grid[(0, 0)].same_as(p)
    for (r1, r2), q in rec.grid.items():
        if r1 == 0:
            assert q.f2 == p.f2
        else:
            assert q.f1 == rec.grid[(0, r2)].f1
    assert rec.status == "max-iterations"
    assert rec.to_csv().splitlines()[0] == "r1,r2,x,y,z,w,height"


def test_heights_grow_quadratically_along_a_ray(sample):
    p = on_m(sample, 2)
    hs = [p.height()]
    q = p
    for _ in range(4):
        q = D.translate(q, 1)
        hs.append(q.height())
    # second differences of a quadratic are constant; allow bounded noise
    d2 = [hs[k + 1] - 2 * hs[k] + hs[k - 1] for k in range(1, len(hs) - 1)]
    assert all(v > 0 for v in d2)
    assert max(d2) / min(d2) < 1.5


def test_orbit_height_guard(sample):
    rec = D.orbit_grid(on_m(sample, 2), 6, 0, D.OrbitGuards(height_cap=50))
    assert rec.status == "escaped-precision" or any("height" in n for n in rec.notes)


@pytest.mark.parametrize("s", [F(2), F(-1, 3), F(5, 7), F(3)])
def test_injected_negatives_not_certified(sample, s):
    out = D.finite_orbit_check(on_m(sample, s), 6, 6)
    assert out.certificate is None and out.status == "infinite"


def test_number_field_negative(sample):
    tv = D.torsion_value_list(sample, 1, 2)[0]
    a = NumberFieldElement.generator(tv.value)
    out = D.finite_orbit_check(D.SurfacePoint.make(sample, (a, 1, a, 1)), 4, 4)
    assert out.status == "infinite"


def test_certificate_caps_validated(sample):
    with pytest.raises(InvalidArgument):
        D.finite_orbit_check(on_m(sample, 2), 0, 3)


def test_search_small(sample):
    rep = D.finite_orbit_search(sample, 2)
    assert rep.candidates > 0
    assert sum(rep.rejected.values()) + len(rep.catalog) + len(rep.inconclusive) == rep.candidates
    for entry in rep.catalog:
        assert entry["m"] <= 2


@pytest.mark.parametrize("s", [F(1, 2), F(-3), F(7, 5)])
def test_bezout_count(sample, s):
    r = D.bezout_fiber_check(sample, s)
    assert r.ok and not r.degenerate
    # each singular f_1-fiber meets an f_2-fiber in F_1 . F_2 = 2 points
    assert r.count == 2 * r.n_sing <= 9 * r.n_sing


def test_conjugate_fraction_properties(sample):
    tv = [v for v in D.torsion_value_list(sample, 1, 3) if v.value is not None and v.value.degree >= 8][0]
    bad = D.bad_locus(sample, 1)
    assert D.conjugate_control_experiment(tv.value, 0.0, bad).fraction == 1.0
    fr = [D.conjugate_control_experiment(tv.value, d, bad).fraction for d in (0.001, 0.01, 0.1, 1.0)]
    assert fr == sorted(fr, reverse=True)
    res = D.calibrate_delta(tv.value, bad, 0.75, 1.0)
    assert res.delta > 0 and res.fraction >= 0.75
    assert not math.isinf(min(res.distances))
