"""Quartic surfaces through three skew lines and their pencils of cubics.

Coordinates on P^3 are (x, y, z, w).  The three lines are fixed:

    L1 = {z = w = 0},   L2 = {x = y = 0},   M = {x - z = y - w = 0}.

The pencil of planes through L1 gives the first elliptic fibration
f1 = z/w, the pencil through L2 gives f2 = x/y.  In both cases the other
axis line supplies the zero section and M supplies the extra section.

Each pencil is covered by two charts.  Chart ``0`` uses the affine
parameter t, chart ``"inf"`` uses t' = 1/t:

    axis  chart  plane coords  embedding                zero      section
    L1    0      (x, y, w)     (x, y, t w, w)           (0:0:1)   (t:1:1)
    L1    inf    (x, y, z)     (x, y, z, t' z)          (0:0:1)   (1:t':1)
    L2    0      (y, z, w)     (t y, y, z, w)           (1:0:0)   (1:t:1)
    L2    inf    (x, z, w)     (x, t' x, z, w)          (1:0:0)   (1:1:t')
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .errors import ConstructionFailed, InternalConsistencyError, InvalidArgument
from .exact import MultiPoly, isolate_roots, to_fraction

AXES = ("L1", "L2")
CHARTS = (0, "inf")


def quartic_monomials():
    """The 35 exponent vectors of quartic monomials, lex-descending in x,y,z,w."""
    mons = [
        (a, b, c, 4 - a - b - c)
        for a in range(5)
        for b in range(5 - a)
        for c in range(5 - a - b)
    ]
    return sorted(mons, reverse=True)


@dataclass(frozen=True)
class Line3:
    """A line of P^3 cut out by two linear forms, with a parameterization.

    ``param`` holds two points P, Q spanning the line; (u:v) -> uP + vQ.
    """

    name: str
    forms: tuple
    param: tuple

    def __post_init__(self):
        rows = [list(map(Fraction, f)) for f in self.forms]
        if _rank(rows) != 2:
            raise InvalidArgument(f"{self.name}: linear forms are dependent")
        for f in self.forms:
            for p in self.param:
                if sum(Fraction(a) * b for a, b in zip(f, p)):
                    raise InvalidArgument(f"{self.name}: parameterization leaves the line")

    def point(self, u, v):
        P, Q = self.param
        return tuple(u * a + v * b for a, b in zip(P, Q))

    def contains(self, p):
        return all(sum(a * c for a, c in zip(f, p)) == 0 for f in self.forms)

    def restrict(self, F: MultiPoly) -> MultiPoly:
        """F(uP + vQ) as a binary form in (u, v)."""
        u, v = MultiPoly.gens(2)
        P, Q = self.param
        images = [u * a + v * b for a, b in zip(P, Q)]
        return F.substitute(images)


def _rank(rows):
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col] / m[rank][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


L1 = Line3("L1", ((0, 0, 1, 0), (0, 0, 0, 1)), ((1, 0, 0, 0), (0, 1, 0, 0)))
L2 = Line3("L2", ((1, 0, 0, 0), (0, 1, 0, 0)), ((0, 0, 1, 0), (0, 0, 0, 1)))
M = Line3("M", ((1, 0, -1, 0), (0, 1, 0, -1)), ((1, 0, 1, 0), (0, 1, 0, 1)))


def lines_skew(a: Line3, b: Line3) -> bool:
    return _rank([list(map(Fraction, f)) for f in a.forms + b.forms]) == 4


def line_conditions():
    """Linear conditions on the 35 quartic coefficients for vanishing on L1, L2, M."""
    mons = quartic_monomials()
    rows = []
    for line in (L1, L2, M):
        # F(uP + vQ) coefficient of u^i v^(4-i), linear in the coefficients of F
        for i in range(5):
            row = []
            for m in mons:
                mono = MultiPoly({m: 1}, 4)
                r = line.restrict(mono)
                row.append(r.coeff((i, 4 - i)))
            rows.append(row)
    return rows


def linear_system_dimension():
    """Dimension of the space of quartics containing L1, L2 and M (affine count)."""
    return 35 - _rank(line_conditions())


@dataclass(frozen=True)
class QuarticSurface:
    F: MultiPoly
    lines: tuple = (L1, L2, M)
    seed: int | None = None
    bound: int | None = None
    certificate: dict = field(default_factory=dict, compare=False)

    def coefficients(self):
        return [self.F.coeff(m) for m in quartic_monomials()]

    def contains_line(self, line: Line3) -> bool:
        return line.restrict(self.F).is_zero()

    def evaluate(self, p):
        return self.F.evaluate(tuple(p))

    def gradient(self):
        return tuple(self.F.diff(i) for i in range(4))

    # serialization ------------------------------------------------------
    def to_text(self) -> str:
        lines = ["# quarticlab surface v1",
                 "# F coefficients in lex-descending monomial order of (x, y, z, w)"]
        if self.seed is not None:
            lines.append(f"seed {self.seed}")
        if self.bound is not None:
            lines.append(f"bound {self.bound}")
        lines.append("F " + " ".join(str(c) for c in self.coefficients()))
        for ln in self.lines:
            forms = " ; ".join(" ".join(str(c) for c in f) for f in ln.forms)
            params = " ; ".join(" ".join(str(c) for c in p) for p in ln.param)
            lines.append(f"line {ln.name} forms {forms} param {params}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QuarticSurface":
        seed = bound = None
        coeffs = None
        lines = []
        for raw in text.splitlines():
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            key, _, rest = raw.partition(" ")
            if key == "seed":
                seed = int(rest)
            elif key == "bound":
                bound = int(rest)
            elif key == "F":
                coeffs = [Fraction(c) for c in rest.split()]
            elif key == "line":
                name, _, rest = rest.partition(" forms ")
                forms_s, _, param_s = rest.partition(" param ")
                forms = tuple(tuple(Fraction(c) for c in part.split()) for part in forms_s.split(";"))
                param = tuple(tuple(Fraction(c) for c in part.split()) for part in param_s.split(";"))
                lines.append(Line3(name.strip(), forms, param))
            else:
                raise InvalidArgument(f"unknown record {key!r}")
        if coeffs is None or len(coeffs) != 35:
            raise InvalidArgument("surface text needs exactly 35 coefficients")
        F = MultiPoly(dict(zip(quartic_monomials(), coeffs)), 4)
        return cls(F, tuple(lines) if lines else (L1, L2, M), seed, bound)


# ---------------------------------------------------------------------------
# Pencils
# ---------------------------------------------------------------------------

# (axis, chart) -> (embedding, divisor index in plane coords, zero point,
# section point, axis restriction index).  Embedding entries are
# (plane_index, multiplied_by_t).  Points are triples of constant-first
# coefficient lists in t.
_PENCILS = {
    ("L1", 0): dict(embed=((0, False), (1, False), (2, True), (2, False)), divide=2,
                    names=("x", "y", "w"), zero=((0,), (0,), (1,)), section=((0, 1), (1,), (1,)),
                    axis_var=2),
    ("L1", "inf"): dict(embed=((0, False), (1, False), (2, False), (2, True)), divide=2,
                        names=("x", "y", "z"), zero=((0,), (0,), (1,)), section=((1,), (0, 1), (1,)),
                        axis_var=2),
    ("L2", 0): dict(embed=((0, True), (0, False), (1, False), (2, False)), divide=0,
                    names=("y", "z", "w"), zero=((1,), (0,), (0,)), section=((1,), (0, 1), (1,)),
                    axis_var=0),
    ("L2", "inf"): dict(embed=((0, False), (0, True), (1, False), (2, False)), divide=0,
                        names=("x", "z", "w"), zero=((1,), (0,), (0,)), section=((1,), (1,), (0, 1)),
                        axis_var=0),
}


def _poly_eval(coeffs, t):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


@dataclass(frozen=True)
class ResidualCubicFamily:
    """The plane cubic residual to the axis line, over one pencil chart.

    ``cubic`` maps exponent triples (in the plane coordinates) to
    constant-first coefficient tuples in the pencil parameter.
    """

    axis: str
    chart: object
    cubic: dict
    coord_names: tuple

    @property
    def spec(self):
        return _PENCILS[(self.axis, self.chart)]

    def at(self, t):
        """Coefficients of C_t for a concrete parameter value."""
        return {e: _poly_eval(c, t) for e, c in self.cubic.items()}

    def evaluate(self, t, point):
        total = 0
        for e, c in self.cubic.items():
            term = _poly_eval(c, t)
            for v, k in zip(point, e):
                if k:
                    term = term * v**k
            total = total + term
        return total

    def t_degree(self):
        return max(len(c) - 1 for c in self.cubic.values())

    def zero_point(self, t):
        return tuple(_poly_eval(c, t) for c in self.spec["zero"])

    def section_point(self, t):
        return tuple(_poly_eval(c, t) for c in self.spec["section"])

    def embed(self, t, q):
        """Plane coordinates at parameter t -> point of P^3."""
        return tuple(q[i] * t if mult else q[i] for i, mult in self.spec["embed"])

    def as_multipoly(self):
        """C as a MultiPoly in (plane coords..., t)."""
        terms = {}
        for e, coeffs in self.cubic.items():
            for k, c in enumerate(coeffs):
                if c:
                    terms[e + (k,)] = c
        return MultiPoly(terms, 4)

    def axis_restriction(self):
        """Coefficients of C restricted to the axis line, as binary cubic in t.

        Returns a dict mapping exponent pairs of the two remaining plane
        coordinates to coefficient tuples in t.
        """
        av = self.spec["axis_var"]
        out = {}
        for e, c in self.cubic.items():
            if e[av] == 0:
                key = tuple(k for i, k in enumerate(e) if i != av)
                out[key] = c
        return out


def residual_cubic(S: QuarticSurface, axis: str, chart=0) -> ResidualCubicFamily:
    """Substitute the pencil plane into F and divide off the axis line."""
    if axis not in AXES or chart not in CHARTS:
        raise InvalidArgument(f"unknown pencil {(axis, chart)!r}")
    spec = _PENCILS[(axis, chart)]
    q = MultiPoly.gens(4)  # three plane coordinates and t
    t = q[3]
    images = [q[i] * t if mult else q[i] for i, mult in spec["embed"]]
    G = S.F.substitute(images)
    d = spec["divide"]
    cubic = {}
    for e, c in G.terms.items():
        if e[d] == 0:
            raise InternalConsistencyError(
                f"F does not vanish on the axis {axis}: division by the plane coordinate is not exact")
        e2 = list(e[:3])
        e2[d] -= 1
        key = tuple(e2)
        coeffs = list(cubic.get(key, ()))
        k = e[3]
        coeffs += [Fraction(0)] * (k + 1 - len(coeffs))
        coeffs[k] += c
        cubic[key] = coeffs
    cubic = {e: tuple(c) for e, c in cubic.items() if any(c)}
    if any(sum(e) != 3 for e in cubic):
        raise InternalConsistencyError("residual curve is not a cubic")
    return ResidualCubicFamily(axis, chart, cubic, spec["names"])


def line_section_point(S: QuarticSurface, axis: str, t, which: str = "section"):
    """Intersection of a construction line with the pencil plane at t.

    ``which`` is ``"zero"`` (the other axis line) or ``"section"`` (M).
    ``t`` may be ``"inf"``; the plane at infinity is read on the second chart.
    """
    if t == "inf":
        fam = residual_cubic(S, axis, "inf")
        t = 0
    else:
        fam = residual_cubic(S, axis, 0)
    return fam.zero_point(t) if which == "zero" else fam.section_point(t)


@dataclass(frozen=True)
class TrisectionResult:
    points: tuple  # ((AlgebraicNumber or None, multiplicity), ...) as ratios
    discriminant: Fraction
    excluded: bool = False


def trisection_points(S: QuarticSurface, axis: str, t) -> TrisectionResult:
    """C_t meets the axis line in three points (a binary cubic).

    Points are returned as the ratio of the two remaining plane coordinates
    (first / second), ``None`` standing for the point where the second one
    vanishes.  For rational t the ratios are certified AlgebraicNumbers.
    """
    chart = 0
    if t == "inf":
        chart, t = "inf", 0
    fam = residual_cubic(S, axis, chart)
    restr = fam.axis_restriction()
    t = to_fraction(t)
    # binary cubic sum c_{ij} u^i v^j with i + j = 3; ratio r = u / v
    bc = [Fraction(0)] * 4
    for (i, j), c in restr.items():
        bc[i] += _poly_eval(c, t)
    if not any(bc):
        return TrisectionResult((), Fraction(0), excluded=True)
    pts = []
    deg = max(i for i in range(4) if bc[i])
    if deg < 3:
        pts.append((None, 3 - deg))  # roots at v = 0
    if deg >= 1:
        for r in isolate_roots(bc[: deg + 1], 1e-20):
            pts.append((r, r.multiplicity))
    # discriminant of the binary form (degree 3, homogeneous convention)
    disc = _binary_cubic_discriminant(bc)
    return TrisectionResult(tuple(pts), disc)


def _binary_cubic_discriminant(bc):
    d, c, b, a = bc  # a u^3 + b u^2 v + c u v^2 + d v^3
    return b * b * c * c - 4 * a * c**3 - 4 * b**3 * d - 27 * a * a * d * d + 18 * a * b * c * d


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _free_groups():
    groups = {}
    for m in quartic_monomials():
        a, b, c, d = m
        if a + b >= 1 and c + d >= 1:
            groups.setdefault(a + c, []).append(m)
    return groups


def sample_three_line_quartic(rng: random.Random, bound: int) -> MultiPoly:
    """Random member of the linear system of quartics through L1, L2, M.

    Coefficients off L1 and L2 are drawn in [-bound, bound]; one monomial
    per (x,z)-degree class absorbs the linear condition imposed by M.
    """
    coef = {}
    for k, group in sorted(_free_groups().items()):
        pivot, rest = group[0], group[1:]
        total = 0
        for m in rest:
            coef[m] = rng.randint(-bound, bound)
            total += coef[m]
        coef[pivot] = -total
    return MultiPoly(coef, 4)


def is_irreducible(F: MultiPoly) -> bool:
    gens = sympy.symbols("x y z w")
    _, factors = sympy.factor_list(F.to_sympy(gens).as_expr(), *gens)
    return len(factors) == 1 and factors[0][1] == 1


def axis_smoothness(S: QuarticSurface, line: Line3) -> bool:
    """Exact check that S is smooth along a line it contains.

    The four partials restricted to the line are binary cubics in the line
    parameters (u, v); S is singular at a point of the line iff all of them
    vanish there, i.e. iff their gcd is a non-constant form.
    """
    u, v = sympy.symbols("u v")
    forms = [line.restrict(g).to_sympy((u, v)).as_expr() for g in S.gradient()]
    forms = [f for f in forms if f != 0]
    if not forms:
        return False
    g = forms[0]
    for f in forms[1:]:
        g = sympy.gcd(g, f)
    return sympy.Poly(g, u, v).total_degree() == 0


def build_three_line_quartic(coefficient_seed: int, bound: int = 3, max_attempts: int = 40,
                             check_smooth: bool = True) -> QuarticSurface:
    """Deterministically sample a smooth quartic containing L1, L2 and M."""
    if bound < 1:
        raise InvalidArgument("bound must be >= 1")
    for a, b in ((L1, L2), (L1, M), (L2, M)):
        if not lines_skew(a, b):
            raise InternalConsistencyError(f"{a.name} and {b.name} are not skew")
    failures = Counter()
    for attempt in range(max_attempts):
        rng = random.Random(f"{coefficient_seed}:{attempt}")
        F = sample_three_line_quartic(rng, bound)
        S = QuarticSurface(F, (L1, L2, M), coefficient_seed, bound)
        if not all(S.contains_line(ln) for ln in (L1, L2, M)):
            raise InternalConsistencyError("sampled quartic misses a construction line")
        if not is_irreducible(F):
            failures["reducible"] += 1
            continue
        if not (axis_smoothness(S, L1) and axis_smoothness(S, L2) and axis_smoothness(S, M)):
            failures["singular-on-line"] += 1
            continue
        if check_smooth:
            from .weierstrass import smoothness_certificate

            cert = smoothness_certificate(S)
            if not cert["smooth"]:
                failures[cert["reason"]] += 1
                continue
            S = QuarticSurface(F, (L1, L2, M), coefficient_seed, bound,
                               certificate=dict(cert, attempt=attempt))
        return S
    worst = failures.most_common(1)[0][0] if failures else "none"
    raise ConstructionFailed(
        f"no valid quartic after {max_attempts} attempts (most frequent failure: {worst})",
        diagnostics=dict(failures))
