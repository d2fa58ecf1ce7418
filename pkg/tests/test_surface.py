import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quarticlab.errors import ConstructionFailed, InvalidArgument
from quarticlab.exact import MultiPoly
from quarticlab.surface import (L1, L2, M, QuarticSurface, build_three_line_quartic, is_irreducible,
                                line_section_point, linear_system_dimension, lines_skew, residual_cubic,
                                trisection_points)

params = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def test_linear_system_dimension():
    # 35 monomials, 5 independent conditions per line
    assert linear_system_dimension() == 35 - 3 * 5


def test_lines_pairwise_skew():
    assert lines_skew(L1, L2) and lines_skew(L1, M) and lines_skew(L2, M)


def test_sample_surface_invariants(sample):
    assert sample.F.is_homogeneous() and sample.F.total_degree() == 4
    for ln in (L1, L2, M):
        assert sample.contains_line(ln)
    assert is_irreducible(sample.F)
    assert sample.certificate["smooth"]


def test_build_is_deterministic(sample):
    again = build_three_line_quartic(1, 3)
    assert again.coefficients() == sample.coefficients()


def test_build_rejects_bad_bound():
    with pytest.raises(InvalidArgument):
        build_three_line_quartic(1, 0)


def test_build_attempt_cap():
    with pytest.raises(ConstructionFailed) as info:
        build_three_line_quartic(5, 1, max_attempts=0)
    assert isinstance(info.value.diagnostics, dict)


def test_text_round_trip(sample):
    back = QuarticSurface.from_text(sample.to_text())
    assert back.coefficients() == sample.coefficients()
    assert back.to_text() == sample.to_text()


@settings(max_examples=50, deadline=None)
@given(params)
def test_residual_cubic_identity_axis_L1(sample, t):
    S = sample
    fam = residual_cubic(S, "L1", 0)
    x, y, w = MultiPoly.gens(3)
    lhs = S.F.substitute([x, y, w * t, w])
    C = MultiPoly({e: sum(c * t ** k for k, c in enumerate(cs)) for e, cs in fam.cubic.items()}, 3)
    assert lhs == w * C


@settings(max_examples=30, deadline=None)
@given(params, st.sampled_from(["L1", "L2"]), st.sampled_from([0, "inf"]))
def test_marked_points_on_cubic(sample, t, axis, chart):
    fam = residual_cubic(sample, axis, chart)
    assert fam.evaluate(t, fam.zero_point(t)) == 0
    assert fam.evaluate(t, fam.section_point(t)) == 0


def test_cubic_degree_and_section_points(sample):
    for axis in ("L1", "L2"):
        fam = residual_cubic(sample, axis, 0)
        assert all(sum(e) == 3 for e in fam.cubic)
    t = Fraction(5, 3)
    assert line_section_point(sample, "L1", t, "zero") == (0, 0, 1)
    assert line_section_point(sample, "L1", t, "section") == (t, 1, 1)
    assert line_section_point(sample, "L2", t, "section") == (1, t, 1)


def test_trisection_three_points(sample):
    rng = random.Random(3)
    for _ in range(5):
        t = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        res = trisection_points(sample, "L1", t)
        assert not res.excluded
        assert sum(m for _, m in res.points) == 3
        distinct = len(res.points) == 3 and all(m == 1 for _, m in res.points)
        assert distinct == (res.discriminant != 0)

