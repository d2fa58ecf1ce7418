"""The two fiberwise translations and their orbits.

Fibration 1 is the pencil of planes z = t w through L1, fibration 2 the
pencil x = s y through L2.  Both use the line M as section and the other
axis line as zero section.  For a point p of S,

    t_i(p) = p + sigma_i(f_i(p))

is computed inside the plane cubic through p with the Nagell transform of
that single fiber, so the same code runs over Q, over Q(alpha) and on
ComplexApprox points.

The orbit set O(p) = {t_1^r1 t_2^r2 (p)} is finite exactly when m, the
order of sigma_2(f_2(p)), is finite and every column p_r = t_2^r(p),
r < m, has sigma_1(f_1(p_r)) of finite order n_r.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import sympy

from .errors import (InternalConsistencyError, InvalidArgument, InvalidPoint,
                     MarkedPointSingular, PrecisionExhausted, SingularFiber, UndefinedMap,
                     UnsupportedDomain)
from .exact import (AlgebraicNumber, ComplexApprox, MultiPoly, NumberFieldElement, algebraic_roots,
                    factor_rational, to_fraction)
from .surface import _PENCILS
from .weierstrass import (cached_family, is_exact, is_zero, nagell_transform,
                          singular_fibers, torsion_order, torsion_value_data)

AXIS = {1: "L1", 2: "L2"}


# ---------------------------------------------------------------------------
# Points of the surface and the two pencil maps
# ---------------------------------------------------------------------------


def _coerce(c):
    if isinstance(c, (ComplexApprox, NumberFieldElement, Fraction)):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, AlgebraicNumber):
        return NumberFieldElement.generator(c)
    if isinstance(c, (float, complex, mpmath.mpf, mpmath.mpc)):
        return ComplexApprox.coerce(c)
    return to_fraction(c)


def _mag(c):
    if isinstance(c, ComplexApprox):
        return abs(c.value)
    if isinstance(c, NumberFieldElement):
        return abs(complex(c))
    return abs(c)


def _pencil_split(p, axis, chart):
    spec = _PENCILS[(axis, chart)]
    emb = spec["embed"]
    i_t = next(i for i, (_, mult) in enumerate(emb) if mult)
    j = emb[i_t][0]
    i_d = next(i for i, (jj, mult) in enumerate(emb) if jj == j and not mult)
    q = [None] * 3
    for i, (jj, mult) in enumerate(emb):
        if not mult:
            q[jj] = p[i]
    return p[i_t], p[i_d], tuple(q)


def pencil_parameter(p, which: int):
    """(chart, parameter, plane coordinates) of p in the pencil of fibration ``which``.

    Exact points use chart 0 whenever possible; numeric points use the
    chart in which the parameter has modulus at most 1.
    """
    axis = AXIS[which]
    num, den, q = _pencil_split(p, axis, 0)
    if is_zero(num) and is_zero(den):
        raise UndefinedMap(f"the point lies on the axis {axis} (fundamental locus of f_{which})")
    exact = all(is_exact(c) for c in p)
    if (exact and not is_zero(den)) or (not exact and _mag(den) >= _mag(num)):
        return 0, num / den, q
    num, den, q = _pencil_split(p, axis, "inf")
    return "inf", num / den, q


def _affine(chart, t):
    """Chart-0 value of a pencil parameter (None for infinity)."""
    if chart == 0:
        return t
    if is_zero(t):
        return None
    return 1 / t


@dataclass(frozen=True, eq=False)
class SurfacePoint:
    """A point of the quartic with cached values of the two pencil maps.

    ``f1`` and ``f2`` are chart-0 parameters (None means infinity, and the
    string "undefined" marks the fundamental locus).  ``singular`` lists
    the fibrations whose fiber through the point is singular.
    """

    surface: object
    coords: tuple
    f1: object = None
    f2: object = None
    fundamental: tuple = ()
    singular: tuple = ()

    @classmethod
    def make(cls, S, coords, check: bool = True, rel_tol: float = 1e-15):
        coords = tuple(_coerce(c) for c in coords)
        if len(coords) != 4 or all(is_zero(c) for c in coords):
            raise InvalidPoint("a point of P^3 needs four coordinates, not all zero")
        coords = _normalize(coords)
        if check:
            val = S.F.evaluate(coords)
            if isinstance(val, ComplexApprox):
                size = max(_mag(c) for c in coords) ** 4 * max(abs(float(c)) for c in S.coefficients())
                if abs(val.value) > val.err + rel_tol * size * 35:
                    raise InvalidPoint("point is not on the surface")
            elif not is_zero(val):
                raise InvalidPoint("point is not on the surface")
        vals, fund, sing = {}, [], []
        for which in (1, 2):
            try:
                chart, t, _ = pencil_parameter(coords, which)
            except UndefinedMap:
                vals[which] = "undefined"
                fund.append(which)
                continue
            vals[which] = _affine(chart, t)
            if _fiber_is_singular(S, which, chart, t):
                sing.append(which)
        return cls(S, coords, vals[1], vals[2], tuple(fund), tuple(sing))

    @property
    def is_exact(self):
        return all(is_exact(c) for c in self.coords)

    def key(self, digits: int = 12):
        """Hashable normal form (exact) or rounded normal form (numeric)."""
        if self.is_exact:
            return tuple(tuple(c.coeffs()) if isinstance(c, NumberFieldElement) else c for c in self.coords)
        out = []
        for c in self.coords:
            v = complex(c)
            out.append((round(v.real, digits), round(v.imag, digits)))
        return tuple(out)

    def distance(self, other) -> float:
        """Projective distance after normalizing by the largest coordinate of self."""
        a = [complex(c) for c in self.coords]
        b = [complex(c) for c in other.coords]
        k = max(range(4), key=lambda i: abs(a[i]))
        if b[k] == 0:
            return math.inf
        a = [x / a[k] for x in a]
        b = [x / b[k] for x in b]
        return max(abs(x - y) for x, y in zip(a, b))

    def same_as(self, other, tol: float = 1e-8) -> bool:
        if self.is_exact and other.is_exact:
            return all(is_zero(self.coords[i] * other.coords[j] - self.coords[j] * other.coords[i])
                       for i in range(4) for j in range(i + 1, 4))
        return self.distance(other) <= tol

    def height(self):
        """Naive height of a rational point (None otherwise)."""
        if not all(isinstance(c, Fraction) for c in self.coords):
            return None
        den = 1
        for c in self.coords:
            den = math.lcm(den, c.denominator)
        ints = [int(c * den) for c in self.coords]
        g = 0
        for v in ints:
            g = math.gcd(g, v)
        return math.log(max(abs(v) // g for v in ints))

    def as_strings(self, digits: int = 15):
        out = []
        for c in self.coords:
            if isinstance(c, Fraction):
                out.append(str(c) if c.numerator.bit_length() < 3000 and c.denominator.bit_length() < 3000
                           else f"~{float(c):.{digits}g}")
            else:
                v = complex(c)
                out.append(f"{v.real:.{digits}g}{v.imag:+.{digits}g}j")
        return out


def _normalize(coords):
    """Scale so that the first (exact) or largest (numeric) coordinate is 1."""
    if all(is_exact(c) for c in coords):
        k = next(i for i, c in enumerate(coords) if not is_zero(c))
    else:
        k = max(range(4), key=lambda i: _mag(coords[i]))
    lead = coords[k]
    return tuple(c / lead if i != k else c / c for i, c in enumerate(coords))


def _fiber_is_singular(S, which, chart, t):
    fam = cached_family(S, AXIS[which])
    disc = fam.charts[chart].discriminant
    acc = 0
    for c in reversed(disc):
        acc = acc * t + c
    if isinstance(acc, ComplexApprox):
        # relative test against the size of the terms
        size = sum(abs(float(c)) * max(1.0, _mag(t)) ** k for k, c in enumerate(disc))
        return abs(acc.value) <= acc.err + 1e-20 * size
    return is_zero(acc)


def _fiber_transform(S, which, chart, t):
    fam = cached_family(S, AXIS[which]).cubics[chart]
    C = fam.at(t)
    E = nagell_transform(C, fam.zero_point(t))
    d = E.discriminant
    if is_zero(d):
        raise SingularFiber(f"the f_{which}-fiber through the point is singular")
    return fam, E


def translate(p: SurfacePoint, which: int) -> SurfacePoint:
    """t_which(p) = p + sigma_which(f_which(p)) inside the fiber of f_which."""
    if which not in (1, 2):
        raise InvalidArgument("which must be 1 or 2")
    if which in p.fundamental:
        raise UndefinedMap(f"f_{which} is undefined at the point")
    if which in p.singular:
        raise SingularFiber(f"the f_{which}-fiber through the point is singular")
    S = p.surface
    chart, t, q = pencil_parameter(p.coords, which)
    try:
        fam, E = _fiber_transform(S, which, chart, t)
    except MarkedPointSingular as exc:
        raise SingularFiber(str(exc)) from exc
    tr = E.transform
    P = tr.from_cubic(q)
    Sg = tr.from_cubic(fam.section_point(t))
    R = E.add(P, Sg, check=False)
    q2 = tr.to_cubic(R)
    return SurfacePoint.make(S, fam.embed(t, q2), check=False)


def translate_power(p: SurfacePoint, which: int, r: int) -> SurfacePoint:
    for _ in range(r):
        p = translate(p, which)
    return p


def section_point_on_surface(S, which: int, t) -> SurfacePoint:
    """The point sigma_which(t) of M in the plane with parameter t (None: infinity)."""
    fam = cached_family(S, AXIS[which])
    chart, tt = (0, t) if t is not None else ("inf", Fraction(0))
    cf = fam.cubics[chart]
    return SurfacePoint.make(S, cf.embed(tt, cf.section_point(tt)))


def zero_point_on_surface(S, which: int, t) -> SurfacePoint:
    fam = cached_family(S, AXIS[which])
    chart, tt = (0, t) if t is not None else ("inf", Fraction(0))
    cf = fam.cubics[chart]
    return SurfacePoint.make(S, cf.embed(tt, cf.zero_point(tt)))


# ---------------------------------------------------------------------------
# Orbits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitGuards:
    height_cap: float = 5000.0  # naive height of exact points
    precision_floor: float = 1e-12  # largest tolerated relative coordinate error
    bad_margin: float = 0.0  # distance of f_i(p) to the singular parameters


@dataclass
class OrbitRecord:
    base: SurfacePoint
    grid: dict  # (r1, r2) -> SurfacePoint
    status: str  # finite | escaped-precision | max-iterations | hit-bad-locus
    heights: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def distinct(self, tol: float = 1e-8):
        pts = []
        for k in sorted(self.grid):
            P = self.grid[k]
            if not any(P.same_as(Q, tol) for Q in pts):
                pts.append(P)
        return pts

    def to_csv(self, digits: int = 15):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r1", "r2", "x", "y", "z", "w", "height"])
        for (r1, r2) in sorted(self.grid):
            P = self.grid[(r1, r2)]
            h = self.heights.get((r1, r2))
            w.writerow([r1, r2, *P.as_strings(digits), "" if h is None else f"{h:.12g}"])
        return buf.getvalue()


def _rel_error(p: SurfacePoint):
    errs = [c.err / max(abs(c.value), 1e-300) for c in p.coords if isinstance(c, ComplexApprox)
            and abs(c.value) > 1e-30]
    return float(max(errs)) if errs else 0.0


def _bad_distance(p: SurfacePoint, which, bad):
    v = p.f1 if which == 1 else p.f2
    if v is None or not bad[which]:
        return math.inf
    z = complex(v)
    return min(abs(z - b) for b in bad[which])


def orbit_grid(p: SurfacePoint, r1max: int, r2max: int, guards: OrbitGuards | None = None) -> OrbitRecord:
    """t_1^r1 t_2^r2 (p) for r1 <= r1max, r2 <= r2max.

    Rays stop at the first guard trip; the trip becomes the record status.
    Status "finite" means every computed ray closed up on itself.
    """
    guards = guards or OrbitGuards()
    if r1max < 0 or r2max < 0:
        raise InvalidArgument("ray lengths must be non-negative")
    bad = {1: [], 2: []}
    if guards.bad_margin > 0:
        for which in (1, 2):
            loc = singular_fibers(cached_family(p.surface, AXIS[which]), 1e-20)
            bad[which] = [complex(r.center) for r in loc.roots]
    grid, heights, notes = {}, {}, []
    status = None
    closed = True

    def record(key, P):
        grid[key] = P
        h = P.height()
        if h is not None:
            heights[key] = h
        return h

    def guard(P):
        h = P.height()
        if h is not None and h > guards.height_cap:
            return "max-iterations", "height cap reached"
        if _rel_error(P) > guards.precision_floor:
            return "escaped-precision", "coordinate error above the precision floor"
        for which in (1, 2):
            if _bad_distance(P, which, bad) < guards.bad_margin:
                return "hit-bad-locus", f"within the margin of a singular f_{which}-fiber"
        return None

    column = p
    record((0, 0), p)
    for r2 in range(r2max + 1):
        if r2 > 0:
            try:
                column = translate(column, 2)
            except (UndefinedMap, SingularFiber) as exc:
                status, closed = status or "hit-bad-locus", False
                notes.append(f"t2 at r2={r2}: {exc}")
                break
            except PrecisionExhausted as exc:
                status, closed = status or "escaped-precision", False
                notes.append(f"t2 at r2={r2}: {exc}")
                break
            trip = guard(column)
            if trip:
                status, closed = status or trip[0], False
                notes.append(f"r2={r2}: {trip[1]}")
                break
            record((0, r2), column)
        Q = column
        ray_closed = False
        for r1 in range(1, r1max + 1):
            try:
                Q = translate(Q, 1)
            except (UndefinedMap, SingularFiber) as exc:
                status = status or "hit-bad-locus"
                notes.append(f"t1 at ({r1}, {r2}): {exc}")
                break
            except PrecisionExhausted as exc:
                status = status or "escaped-precision"
                notes.append(f"t1 at ({r1}, {r2}): {exc}")
                break
            trip = guard(Q)
            if trip:
                status = status or trip[0]
                notes.append(f"({r1}, {r2}): {trip[1]}")
                break
            record((r1, r2), Q)
            if Q.same_as(column):
                ray_closed = True
                break
        closed = closed and (ray_closed or r1max == 0)
    if status is None:
        status = "finite" if closed and _column_closed(grid, p) else "max-iterations"
    return OrbitRecord(p, grid, status, heights, notes)


def _column_closed(grid, p):
    col = [grid[k] for k in sorted(grid) if k[0] == 0 and k[1] > 0]
    return any(P.same_as(p) for P in col) or not col


# ---------------------------------------------------------------------------
# Finite-orbit certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteOrbitCertificate:
    point: SurfacePoint
    b: object  # f_2(p)
    m: int  # order of sigma_2(b)
    n: tuple  # orders n_r of sigma_1(f_1(p_r)), r < m
    cardinality: int  # number of distinct orbit points found by replay

    @property
    def bound(self):
        return sum(self.n)

    def as_dict(self):
        return dict(m=self.m, n=list(self.n), bound=self.bound, cardinality=self.cardinality,
                    point=self.point.as_strings())


@dataclass(frozen=True)
class CertificateOutcome:
    certificate: FiniteOrbitCertificate | None
    status: str  # certified | infinite | inconclusive | undefined
    reason: str


def _section_order(S, which, value, order_max):
    """Exact order of sigma_which at the chart-0 parameter ``value`` (None: infinity)."""
    fam = cached_family(S, AXIS[which])
    chart, t = (0, value) if value is not None else ("inf", Fraction(0))
    model = fam.charts[chart]
    E = model.fiber(t)
    if is_zero(E.discriminant):
        raise SingularFiber(f"f_{which}-fiber is singular")
    return torsion_order(E, model.section(t), order_max)


def finite_orbit_check(p: SurfacePoint, m_max: int, n_max: int) -> CertificateOutcome:
    """Decide finiteness of O(p) for orders up to the caps, with a reason.

    Certificates are only issued for exact points; the replay re-walks the
    orbit and must close up in every column.
    """
    if m_max < 1 or n_max < 1:
        raise InvalidArgument("order caps must be positive")
    if p.fundamental or p.singular:
        return CertificateOutcome(None, "undefined", "point on a fundamental locus or a singular fiber")
    if not p.is_exact:
        return _numeric_check(p, m_max, n_max)
    S = p.surface
    m = _section_order(S, 2, p.f2, m_max)
    if m is None:
        return CertificateOutcome(None, "infinite", f"sigma_2(f_2(p)) has no order <= {m_max}")
    cols, ns = [], []
    q = p
    for r in range(m):
        if q.fundamental or q.singular:
            return CertificateOutcome(None, "undefined", f"column {r} meets a bad locus")
        n = _section_order(S, 1, q.f1, n_max)
        if n is None:
            return CertificateOutcome(None, "infinite", f"sigma_1(f_1(p_{r})) has no order <= {n_max}")
        cols.append(q)
        ns.append(n)
        q = translate(q, 2)
    if not q.same_as(p):
        raise InternalConsistencyError("t_2^m(p) != p although sigma_2(f_2(p)) has order m")
    pts = []
    for r, (c, n) in enumerate(zip(cols, ns)):
        Q = c
        for k in range(n):
            if not any(Q.same_as(R) for R in pts):
                pts.append(Q)
            Q = translate(Q, 1)
        if not Q.same_as(c):
            raise InternalConsistencyError(f"t_1^{n}(p_{r}) != p_{r}")
    cert = FiniteOrbitCertificate(p, p.f2, m, tuple(ns), len(pts))
    return CertificateOutcome(cert, "certified", "exact replay closed in every column")


def finite_orbit_certificate(p: SurfacePoint, m_max: int, n_max: int) -> FiniteOrbitCertificate | None:
    return finite_orbit_check(p, m_max, n_max).certificate


def _numeric_order(S, which, value, order_max, dps=40):
    """Order suggested by rational Betti coordinates, or None."""
    from .betti import betti_coords, detect_rational, elliptic_log, period_lattice

    fam = cached_family(S, AXIS[which])
    chart, t = (0, value) if value is not None else ("inf", ComplexApprox(0))
    if chart == 0 and _mag(t) > 1:
        chart, t = "inf", 1 / t
    model = fam.charts[chart]
    with mpmath.workdps(dps):
        E = model.fiber(t)
        P = model.section(t)
        lat = period_lattice(E, dps)
        b = betti_coords(elliptic_log(E, P, lat, dps), lat)
        hit = detect_rational(b, order_max, err=max(b.err1, 1e-20))
    return None if hit is None else hit.q


def _numeric_check(p, m_max, n_max):
    S = p.surface
    m = _numeric_order(S, 2, p.f2, m_max)
    if m is None:
        return CertificateOutcome(None, "infinite", f"sigma_2(f_2(p)) has no rational Betti point with q <= {m_max}")
    q = p
    for r in range(m):
        if _numeric_order(S, 1, q.f1, n_max) is None:
            return CertificateOutcome(None, "infinite", f"column {r}: no rational Betti point with q <= {n_max}")
        q = translate(q, 2)
    return CertificateOutcome(None, "inconclusive", "numerically finite; exact confirmation unavailable")


# ---------------------------------------------------------------------------
# Search over pairs of torsion values
# ---------------------------------------------------------------------------


def _line_quadric(S):
    """Q(u, v; a, b) with F on the line {f_1 = a, f_2 = b} equal to u v Q.

    Returned per chart pair as MultiPoly in (u, v, a, b).
    """
    out = {}
    u, v, a, b = MultiPoly.gens(4)
    for c2 in (0, "inf"):
        xy = (b * u, u) if c2 == 0 else (u, b * u)
        for c1 in (0, "inf"):
            zw = (a * v, v) if c1 == 0 else (v, a * v)
            G = S.F.substitute([xy[0], xy[1], zw[0], zw[1]])
            terms = {}
            for e, c in G.terms.items():
                if e[0] < 1 or e[1] < 1:
                    raise InternalConsistencyError("F does not vanish at the axis points of the line")
                terms[(e[0] - 1, e[1] - 1, e[2], e[3])] = c
            out[(c1, c2)] = MultiPoly(terms, 4)
    return out


_QUADRIC_CACHE = {}


def line_points(S, a, b):
    """Points p with f_1(p) = a, f_2(p) = b off the axis lines (chart-0 values, None = infinity).

    ``a``, ``b`` may be exact or ComplexApprox; returns SurfacePoints.
    """
    key = tuple(S.coefficients())
    if key not in _QUADRIC_CACHE:
        _QUADRIC_CACHE[key] = _line_quadric(S)
    quads = _QUADRIC_CACHE[key]
    c1, av = (0, a) if a is not None else ("inf", Fraction(0))
    c2, bv = (0, b) if b is not None else ("inf", Fraction(0))
    Q = quads[(c1, c2)]
    co = {0: 0, 1: 0, 2: 0}
    for e, c in Q.terms.items():
        co[e[0]] = co[e[0]] + c * _pw(av, e[2]) * _pw(bv, e[3])
    quu, quv, qvv = co[2], co[1], co[0]
    roots = []
    if is_zero(quu):
        if is_zero(quv):
            return []
        roots = [(-qvv, quv)]  # the other root is v = 0, on L1
    else:
        disc = quv * quv - 4 * quu * qvv
        if isinstance(disc, ComplexApprox):
            sq = disc.sqrt() if not disc.contains_zero() else ComplexApprox(0, mpmath.sqrt(disc.err + abs(disc.value)))
            roots = [((-quv + sq), 2 * quu), ((-quv - sq), 2 * quu)]
        else:
            raise UnsupportedDomain("exact line points need a square root; use numeric parameters")
    pts = []
    for uu, vv in roots:
        xy = (bv * uu, uu) if c2 == 0 else (uu, bv * uu)
        zw = (av * vv, vv) if c1 == 0 else (vv, av * vv)
        pts.append(SurfacePoint.make(S, (xy[0], xy[1], zw[0], zw[1]), check=False))
    return pts


def _pw(v, n):
    return 1 if n == 0 else v ** n


@dataclass(frozen=True)
class TorsionValue:
    fibration: int
    order: int
    minpoly: tuple  # integer coefficients, constant first; () for infinity
    index: int
    value: object  # AlgebraicNumber or None (infinity)

    def approx(self, dps):
        return None if self.value is None else self.value.approx(dps)

    def sort_key(self):
        return (self.order, len(self.minpoly), self.minpoly, self.index)

    def label(self):
        if self.value is None:
            return "inf"
        c = complex(self.value)
        return f"{c.real:.15g}{c.imag:+.15g}j"


_VALUE_CACHE = {}


def torsion_value_list(S, which: int, N: int, precision=1e-30):
    """Torsion values of sigma_which with exact order 1..N, sorted canonically."""
    key = (tuple(S.coefficients()), which, N, precision)
    if key not in _VALUE_CACHE:
        _VALUE_CACHE[key] = _torsion_value_list(S, which, N, precision)
    return list(_VALUE_CACHE[key])


def _torsion_value_list(S, which, N, precision):
    fam = cached_family(S, AXIS[which])
    out = []
    for data in torsion_value_data(fam, N):
        coeffs = list(data.primitive)
        if len(coeffs) > 1:
            for fac, _ in factor_rational(coeffs):
                for r in algebraic_roots(fac, precision):
                    out.append(TorsionValue(which, data.m, tuple(r.minpoly), r.index, r))
        if data.infinity_primitive:
            out.append(TorsionValue(which, data.m, (), 0, None))
    out.sort(key=TorsionValue.sort_key)
    return out


@dataclass
class SearchReport:
    surface_id: str
    N: int
    n_max: int
    catalog: list  # dicts, canonical order
    orders: list  # realized orders m (the multiset O)
    inconclusive: list
    rejected: dict  # reason -> count
    candidates: int

    @property
    def max_order(self):
        return max(self.orders) if self.orders else None

    def to_json(self):
        return json.dumps(dict(schema="quarticlab.finite-orbit-catalog/1", surface=self.surface_id,
                               N=self.N, n_max=self.n_max, candidates=self.candidates,
                               catalog=self.catalog, orders=sorted(self.orders), max_order=self.max_order,
                               inconclusive=self.inconclusive,
                               rejected=dict(sorted(self.rejected.items()))),
                          indent=1, sort_keys=True)


def surface_id(S) -> str:
    return hashlib.sha256(S.to_text().encode()).hexdigest()[:16]


def _nearest_torsion(value, table, scale_tol):
    """Order of the torsion value in ``table`` matching ``value`` (chart-aware), or None."""
    if value is None:
        hits = [tv.order for tv, c in table if c is None]
        return min(hits) if hits else None
    z = complex(value)
    best = None
    for tv, c in table:
        if c is None:
            if abs(z) > 1 / scale_tol:
                best = tv.order if best is None else min(best, tv.order)
            continue
        if abs(z) <= 1 or abs(c) <= 1:
            d = abs(z - c)
        else:
            d = abs(1 / z - 1 / c)
        if d < scale_tol:
            best = tv.order if best is None else min(best, tv.order)
    return best


def finite_orbit_search(S, N: int, n_max: int | None = None, dps: int = 40, match_tol: float = 1e-20,
                        workers: int = 1):
    """Search pairs (sigma_2-torsion value b, sigma_1-torsion value a) of orders <= N.

    Every point p on the line {f_1 = a, f_2 = b} (the fiber intersection) is
    tested: m is the exact order of b, n_0 that of a, and the columns
    p_r = t_2^r(p), r = 1..m-1, are followed numerically; their f_1 values
    are compared with the torsion values of order <= n_max.  Points that
    pass numerically are certified only after an exact replay, which needs
    exactly representable coordinates; otherwise they are listed as
    inconclusive.

    With workers > 1 the b values are split over processes; blocks are
    merged in the canonical order of b, so the report does not depend on
    the pool size.
    """
    if N < 1:
        raise InvalidArgument("N must be at least 1")
    if workers < 1:
        raise InvalidArgument("workers must be at least 1")
    n_max = n_max or N
    nb = len(torsion_value_list(S, 2, N))
    jobs = [(S.to_text(), N, n_max, dps, match_tol, i) for i in range(nb)]
    if workers == 1:
        blocks = [_search_block(S, *job[1:]) for job in jobs]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_search_worker, jobs))
    catalog, orders, inconclusive, rejected, candidates = [], [], [], {}, 0
    for cat, inc, rej, cand in blocks:
        catalog += cat
        inconclusive += inc
        candidates += cand
        for k, v in rej.items():
            rejected[k] = rejected.get(k, 0) + v
    orders = [e["m"] for e in catalog]
    return SearchReport(surface_id(S), N, n_max, catalog, orders, inconclusive, rejected, candidates)


def _search_worker(job):
    from .surface import QuarticSurface

    return _search_block(QuarticSurface.from_text(job[0]), *job[1:])


def _search_block(S, N, n_max, dps, match_tol, b_index):
    """All candidates over the b_index-th sigma_2-torsion value."""
    tb = torsion_value_list(S, 2, N)[b_index]
    vals1 = torsion_value_list(S, 1, max(N, n_max))
    catalog, inconclusive, rejected = [], [], {}
    candidates = 0
    with mpmath.workdps(dps):
        table1 = [(tv, None if tv.value is None else complex(tv.value.approx(dps).value)) for tv in vals1
                  if tv.order <= n_max]
        bval = tb.approx(dps)
        for ta in vals1:
            if ta.order > N:
                continue
            try:
                pts = line_points(S, ta.approx(dps), bval)
            except PrecisionExhausted:
                rejected["precision"] = rejected.get("precision", 0) + 1
                continue
            for k, p in enumerate(pts):
                candidates += 1
                reason, ns = _follow_columns(p, tb.order, ta.order, table1, match_tol)
                if reason is not None:
                    rejected[reason] = rejected.get(reason, 0) + 1
                    continue
                inconclusive.append(dict(b=dict(minpoly=list(tb.minpoly), index=tb.index, value=tb.label()),
                                         a=dict(minpoly=list(ta.minpoly), index=ta.index, value=ta.label()),
                                         m=tb.order, n=ns, root=k, point=p.as_strings(12),
                                         reason="numerically finite; coordinates not exactly representable"))
    return catalog, inconclusive, rejected, candidates


def _follow_columns(p, m, n0, table1, tol):
    if p.fundamental:
        return "fundamental-locus", None
    if p.singular:
        return "singular-fiber", None
    ns = [n0]
    q = p
    for r in range(1, m):
        try:
            q = translate(q, 2)
        except (SingularFiber, UndefinedMap):
            return "bad-locus", None
        except PrecisionExhausted:
            return "precision", None
        if q.fundamental or q.singular:
            return "bad-locus", None
        n = _nearest_torsion(q.f1, table1, tol)
        if n is None:
            return "column-not-torsion", None
        ns.append(n)
    try:
        back = translate(q, 2)
    except (SingularFiber, UndefinedMap, PrecisionExhausted):
        return "bad-locus", None
    if not back.same_as(p, 1e-15):
        raise InternalConsistencyError("t_2^m(p) does not return to p at a torsion value of order m")
    return None, ns


# ---------------------------------------------------------------------------
# Bezout count and conjugate control
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BezoutResult:
    s: object
    n_sing: int
    count: int  # intersections with the singular f_1-fibers, with multiplicity
    plane_count: int  # intersections with the singular f_1-planes (fibers plus the axis L1)
    bound: int
    multiplicities: tuple  # (degree of factor, multiplicity) of the elimination polynomial
    ok: bool
    degenerate: bool = False


def bezout_fiber_check(S, s) -> BezoutResult:
    """Intersections of the f_2-fiber over s with the singular f_1-fibers.

    The fiber is the residual cubic C_s in the plane x = s y, coordinates
    (y, z, w).  The singular f_1-planes are z = t w with Delta_1(t) = 0.
    Eliminating t gives a binary form R(y, w) = Res_t(sqf(Delta_1)(t), C_s(y, t w, w))
    whose degree counts the intersections with the planes.  Each plane
    also contains the axis L1, which meets C_s once, at w = 0; those n
    points are removed to leave the intersections with the fibers.
    """
    s = to_fraction(s)
    fam2 = cached_family(S, "L2").cubics[0]
    fam1 = cached_family(S, "L1")
    loc = singular_fibers(fam1, 1e-20)
    n = loc.count
    n_fin = len(loc.roots)
    C = fam2.at(s)  # exponents in (y, z, w)
    y, w, t = sympy.symbols("y w t")
    G = sympy.expand(sum(sympy.Rational(c.numerator, c.denominator) * y ** e[0] * (t * w) ** e[1] * w ** e[2]
                         for e, c in C.items() if c != 0))
    if G == 0:
        return BezoutResult(s, n, 0, 0, 9 * n, (), False, degenerate=True)
    D = sympy.Poly(sum(sympy.Rational(c.numerator, c.denominator) * t ** k
                       for k, c in enumerate(_numer(fam1.charts[0].discriminant))), t).sqf_part()
    R = sympy.Poly(sympy.expand(sympy.resultant(D, sympy.Poly(G, t))), y, w)
    if R.is_zero:
        return BezoutResult(s, n, 0, 0, 9 * n, (), False, degenerate=True)
    plane_count = R.total_degree()
    k_axis = min(e[1] for e in R.monoms())  # order of R along w = 0
    count = plane_count - min(k_axis, n_fin)
    if loc.at_infinity:
        # the plane w = 0 meets C_s in three points, one of them on L1
        plane_count += 3
        count += 2
    factors = sympy.factor_list(R.as_expr())[1]
    mult = tuple(sorted((int(sympy.Poly(f, y, w).total_degree()), int(k)) for f, k in factors))
    return BezoutResult(s, n, count, plane_count, 9 * n, mult, count <= 9 * n)


def _numer(coeffs):
    den = 1
    for c in coeffs:
        den = math.lcm(den, to_fraction(c).denominator)
    return [to_fraction(c) * den for c in coeffs]


@dataclass(frozen=True)
class ConjugateControl:
    degree: int
    delta: float
    fraction: float
    distances: tuple


def _chart_distance(z, bad):
    """Distance to the bad locus in the chart containing z (|t| <= 1, else 1/t)."""
    if z is None:
        zc, chart = 0j, "inf"
    elif abs(z) <= 1:
        zc, chart = z, 0
    else:
        zc, chart = 1 / z, "inf"
    best = math.inf
    for b in bad:
        if chart == 0:
            if b is not None:
                best = min(best, abs(zc - b))
        else:
            bc = 0j if b is None else (1 / b if b != 0 else None)
            if bc is not None:
                best = min(best, abs(zc - bc))
    return best


def conjugate_distances(t0: AlgebraicNumber, bad):
    return tuple(_chart_distance(complex(c), bad) for c in t0.conjugates())


def conjugate_fraction(distances, delta: float) -> float:
    if not distances:
        return 1.0
    return sum(1 for d in distances if d >= delta) / len(distances)


def bad_locus(S, which: int, extra=()):
    loc = singular_fibers(cached_family(S, AXIS[which]), 1e-20)
    bad = [complex(r.center) for r in loc.roots]
    if loc.at_infinity:
        bad.append(None)
    return bad + list(extra)


def conjugate_control_experiment(t0: AlgebraicNumber, delta: float, bad) -> ConjugateControl:
    """Fraction of the conjugates of t0 at chart distance >= delta from the bad locus."""
    if delta < 0:
        raise InvalidArgument("delta must be non-negative")
    ds = conjugate_distances(t0, bad)
    return ConjugateControl(t0.degree, delta, conjugate_fraction(ds, delta), ds)


def calibrate_delta(t0: AlgebraicNumber, bad, threshold: float = 0.75, delta0: float = 1.0,
                    iters: int = 60) -> ConjugateControl:
    """Largest delta (by bisection from delta0) keeping the fraction >= threshold."""
    ds = conjugate_distances(t0, bad)
    if conjugate_fraction(ds, delta0) >= threshold:
        return ConjugateControl(t0.degree, delta0, conjugate_fraction(ds, delta0), ds)
    lo, hi = 0.0, delta0
    for _ in range(iters):
        mid = (lo + hi) / 2
        if conjugate_fraction(ds, mid) >= threshold:
            lo = mid
        else:
            hi = mid
    return ConjugateControl(t0.degree, lo, conjugate_fraction(ds, lo), ds)
