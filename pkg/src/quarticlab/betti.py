"""Period lattices, elliptic logarithms and Betti coordinates.

Conventions.  Fibers are taken in short form y^2 = x^3 + A x + B and the
invariant differential is dx/y.  With Y = 2y the curve reads
Y^2 = 4x^3 - g2 x - g3 with g2 = -4A, g3 = -4B, so x = wp(z), y = wp'(z)/2
for the Weierstrass function of the lattice L(g2, g3) and dx/y = 2 dz.  The
periods reported here are those of dx/y, i.e. the lattice 2L, and the
elliptic logarithm of P is u = 2z.  For y^2 = x^3 - x the real period is
2 pi / AGM(sqrt 2, 1) = 5.2441151...

Candidate periods come from optimal AGMs over all orderings of the roots;
a pair is accepted once the Eisenstein series of the lattice reproduce g2
and g3.

Two numeric back ends share the code: double precision (cmath) for dense
scans, and mpmath for certified values.
"""

from __future__ import annotations

import cmath
import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import BranchTrackingError, IllConditionedFiber, InvalidArgument, PrecisionExhausted
from .exact import ComplexApprox
from .weierstrass import EllipticPoint, WeierstrassFiber


# ---------------------------------------------------------------------------
# numeric back ends
# ---------------------------------------------------------------------------


class _Double:
    sqrt = staticmethod(cmath.sqrt)
    exp = staticmethod(cmath.exp)
    log = staticmethod(cmath.log)
    pi = math.pi
    eps = 2.0 ** -50

    @staticmethod
    def num(v):
        return complex(v)

    @staticmethod
    def roots(A, B):
        return [complex(r) for r in np.roots([1.0, 0.0, complex(A), complex(B)])]

    @staticmethod
    def rf(x, y, z):
        return _carlson_rf(x, y, z)


class _Multi:
    sqrt = staticmethod(mpmath.sqrt)
    exp = staticmethod(mpmath.exp)
    log = staticmethod(mpmath.log)

    @property
    def pi(self):
        return +mpmath.pi

    @property
    def eps(self):
        return mpmath.mpf(2) ** (-mpmath.mp.prec + 10)

    @staticmethod
    def num(v):
        if isinstance(v, ComplexApprox):
            return v.value
        if isinstance(v, Fraction):
            return mpmath.mpc(mpmath.mpf(v.numerator) / v.denominator)
        return mpmath.mpc(v)

    @staticmethod
    def roots(A, B):
        return list(mpmath.polyroots([1, 0, A, B], maxsteps=200, extraprec=mpmath.mp.prec))

    @staticmethod
    def rf(x, y, z):
        return mpmath.elliprf(x, y, z)


DOUBLE = _Double()
MULTI = _Multi()


def _carlson_rf(x, y, z):
    for _ in range(200):
        sx, sy, sz = cmath.sqrt(x), cmath.sqrt(y), cmath.sqrt(z)
        lam = sx * sy + sx * sz + sy * sz
        x, y, z = (x + lam) / 4, (y + lam) / 4, (z + lam) / 4
        a = (x + y + z) / 3
        if max(abs(a - x), abs(a - y), abs(a - z)) < 1e-4 * abs(a):
            break
    X, Y = 1 - x / a, 1 - y / a
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    return (1 - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44) / cmath.sqrt(a)


def _agm(a, b, ctx, maxiter=200):
    """Optimal AGM: at each step the square root closer to (a+b)/2 is taken."""
    for _ in range(maxiter):
        if abs(a - b) <= abs(a) * ctx.eps * 4:
            return a
        a1 = (a + b) / 2
        b1 = ctx.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
    raise PrecisionExhausted("AGM did not converge")


def _gauss_reduce(w1, w2):
    """Reduced basis of the lattice Z w1 + Z w2 with Im(w2/w1) > 0."""
    for _ in range(200):
        if abs(w2) < abs(w1):
            w1, w2 = w2, w1
        mu = (w2 / w1).real
        k = round(float(mu))
        if k == 0:
            break
        w2 = w2 - k * w1
    if (w2 / w1).imag < 0:
        w2 = -w2
    return w1, w2


def _eisenstein(tau, ctx, terms=None):
    """E4(tau), E6(tau) via Lambert series."""
    q = ctx.exp(2j * ctx.pi * tau) if ctx is DOUBLE else mpmath.exp(2j * mpmath.pi * tau)
    s4 = s6 = 0
    qn = 1
    n = 0
    while True:
        n += 1
        qn = qn * q
        t4 = n ** 3 * qn / (1 - qn)
        t6 = n ** 5 * qn / (1 - qn)
        s4 += t4
        s6 += t6
        if abs(t6) < ctx.eps * 1e-3 or n > 400:
            break
    return 1 + 240 * s4, 1 - 504 * s6


def lattice_invariants(w1, w2, ctx=MULTI):
    """(g2, g3) of the lattice Z w1 + Z w2 (reduced basis, Im(w2/w1) > 0)."""
    tau = w2 / w1
    E4, E6 = _eisenstein(tau, ctx)
    c = 2 * ctx.pi / w1
    return c ** 4 * E4 / 12, c ** 6 * E6 / 216


def _period_basis(A, B, ctx):
    """Reduced basis of the period lattice of dx/y on y^2 = x^3 + A x + B."""
    A, B = ctx.num(A), ctx.num(B)
    disc = -16 * (4 * A ** 3 + 27 * B ** 2)
    scale = max(abs(A) ** 3, abs(B) ** 2, ctx.eps)
    floor = 1e-15 if ctx is DOUBLE else mpmath.mpf(10) ** (-mpmath.mp.dps // 3)
    if abs(disc) < scale * floor:
        raise IllConditionedFiber("fiber too close to singular")
    es = ctx.roots(A, B)
    cands = []
    for i, j, k in itertools.permutations(range(3)):
        a = ctx.sqrt(es[i] - es[k])
        b = ctx.sqrt(es[i] - es[j])
        m = _agm(a, b, ctx)
        cands.append(2 * ctx.pi / m)
    g2, g3 = -4 * A, -4 * B
    size = max(abs(g2) ** 0.5 if ctx is DOUBLE else mpmath.sqrt(abs(g2)),
               abs(g3) ** (1 / 3) if ctx is DOUBLE else mpmath.cbrt(abs(g3)), ctx.eps)
    tol = 1e-8 if ctx is DOUBLE else mpmath.mpf(10) ** (-mpmath.mp.dps // 2)
    best = None
    for wa, wb in itertools.combinations(cands, 2):
        if abs((wb / wa).imag) < 1e-6:
            continue
        w1, w2 = _gauss_reduce(wa, wb)
        h2, h3 = lattice_invariants(w1 / 2, w2 / 2, ctx)
        err = max(abs(h2 - g2) / size ** 2, abs(h3 - g3) / size ** 3)
        if best is None or err < best[0]:
            best = (err, w1, w2)
        if err < tol:
            return w1, w2
    raise PrecisionExhausted(f"no AGM period pair reproduces the lattice invariants (best {best and float(best[0]):.2e})")


@dataclass(frozen=True)
class PeriodLattice:
    w1: ComplexApprox
    w2: ComplexApprox

    @property
    def tau(self):
        return self.w2.value / self.w1.value

    def as_complex(self):
        return complex(self.w1.value), complex(self.w2.value)

    @property
    def real_period(self):
        """Smallest positive real lattice vector, or None if the lattice has none."""
        w1, w2 = self.w1.value, self.w2.value
        tol = 1e-12 * (abs(w1) + abs(w2))
        best = None
        for m in range(-2, 3):
            for n in range(-2, 3):
                v = m * w1 + n * w2
                if (m or n) and abs(v.imag) < tol and v.real > 0 and (best is None or v.real < best):
                    best = v.real
        return best


def period_lattice(E: WeierstrassFiber, dps: int | None = None) -> PeriodLattice:
    """Period lattice of dx/y on the short model of E (any coefficient domain)."""
    S = E.short_model()
    with mpmath.workdps(dps or max(mpmath.mp.dps, 30)):
        A, B = MULTI.num(_to_num(S.a4)), MULTI.num(_to_num(S.a6))
        w1, w2 = _period_basis(A, B, MULTI)
        err = (abs(w1) + abs(w2)) * mpmath.mpf(10) ** (-mpmath.mp.dps + 6)
        return PeriodLattice(ComplexApprox(w1, err), ComplexApprox(w2, err))


def _to_num(v):
    if isinstance(v, ComplexApprox):
        return v.value
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    if hasattr(v, "approx"):
        return v.approx().value
    return v


# ---------------------------------------------------------------------------
# Weierstrass function and elliptic logarithm
# ---------------------------------------------------------------------------


def wp_and_derivative(z, w1, w2, ctx=MULTI):
    """wp(z), wp'(z) for the lattice Z w1 + Z w2 (reduced, Im(w2/w1) > 0)."""
    tau = w2 / w1
    v = z / w1
    # move v into the strip |Im v| <= Im(tau)/2 for fast convergence
    k = round(float(v.imag / tau.imag))
    v = v - k * tau
    v = v - round(float(v.real))
    two_pi_i = 2j * ctx.pi
    q = ctx.exp(two_pi_i * tau)
    u = ctx.exp(two_pi_i * v)
    s = u / (1 - u) ** 2
    ds = u * (1 + u) / (1 - u) ** 3
    qn = 1
    n = 0
    while True:
        n += 1
        qn = qn * q
        a, b = qn * u, qn / u
        ta = a / (1 - a) ** 2
        tb = b / (1 - b) ** 2
        s += ta + tb - 2 * qn / (1 - qn) ** 2
        ds += a * (1 + a) / (1 - a) ** 3 - b * (1 + b) / (1 - b) ** 3
        if (abs(ta) + abs(tb) + abs(qn)) < ctx.eps * 1e-2 * (1 + abs(s)) or n > 500:
            break
    f = two_pi_i / w1
    twelfth = 1 / 12 if ctx is DOUBLE else mpmath.mpf(1) / 12
    return f * f * (s + twelfth), f ** 3 * ds


def _wp_short(z, w1, w2, ctx):
    # lattice of dx/y is 2L; wp refers to L
    p, dp = wp_and_derivative(z, w1 / 2, w2 / 2, ctx)
    return p, dp


def _elliptic_log_raw(x, y, A, B, w1, w2, ctx, roots=None):
    """u with (wp(u/2), wp'(u/2)/2) = (x, y) on the lattice L = (w1, w2)/2."""
    scale = max(abs(x), abs(A) ** 0.5 if ctx is DOUBLE else mpmath.sqrt(abs(A)),
                abs(B) ** (1 / 3) if ctx is DOUBLE else mpmath.cbrt(abs(B)), 1e-300)
    es = roots if roots is not None else ctx.roots(A, B)
    starts = []
    try:
        z0 = ctx.rf(x - es[0], x - es[1], x - es[2])
        starts += [z0]
    except (ValueError, ZeroDivisionError):
        pass
    for z in starts + _grid_starts(w1 / 2, w2 / 2):
        z = _newton_point(z, x, y, A, w1 / 2, w2 / 2, ctx, scale)
        if z is not None:
            return 2 * z
    raise PrecisionExhausted("elliptic logarithm did not converge")


def _grid_starts(l1, l2, n=8):
    return [(a + 0.5) / n * l1 + (b + 0.5) / n * l2 for a in range(n) for b in range(n)]


def _newton_point(z, x, y, A, l1, l2, ctx, scale, iters=80):
    """Solve wp(z) = x, wp'(z)/2 = y near z.

    Each step uses whichever of the two equations is better conditioned:
    wp - x with derivative wp', or wp'/2 - y with derivative wp''/2 =
    3 wp^2 + A (g2 = -4A).  The second one takes over near half periods,
    where wp' vanishes and Newton on wp alone is only linear.
    """
    tol = ctx.eps * 1e3
    size = abs(l1) + abs(l2)
    for k in range(iters):
        p, dp = wp_and_derivative(z, l1, l2, ctx)
        if k == 0 and abs(dp / 2 + y) < abs(dp / 2 - y):
            z = -z
            dp = -dp
        d2 = 3 * p * p + A
        if abs(dp) >= abs(d2) / max(abs(x), 1) ** 0.5 or abs(d2) == 0:
            if dp == 0:
                return None
            step = (p - x) / dp
        else:
            step = (dp / 2 - y) / d2
        z = z - step
        if abs(step) > 10 * size:
            return None
        if abs(step) <= ctx.eps * 8 * (size + abs(z)):
            break
    p, dp = wp_and_derivative(z, l1, l2, ctx)
    if abs(p - x) > tol * 1e3 * scale or abs(dp / 2 - y) > tol * 1e3 * scale ** 1.5:
        return None
    return z


def elliptic_log(E: WeierstrassFiber, P: EllipticPoint, lattice: PeriodLattice | None = None,
                 dps: int | None = None) -> ComplexApprox:
    """Elliptic logarithm of P with respect to dx/y, modulo the period lattice."""
    if P.is_infinity:
        return ComplexApprox(0)
    with mpmath.workdps(dps or max(mpmath.mp.dps, 30)):
        lattice = lattice or period_lattice(E)
        S = E.short_model()
        Q = E.to_short(P)
        A, B = MULTI.num(_to_num(S.a4)), MULTI.num(_to_num(S.a6))
        x, y = MULTI.num(_to_num(Q.x)), MULTI.num(_to_num(Q.y))
        u = _elliptic_log_raw(x, y, A, B, lattice.w1.value, lattice.w2.value, MULTI)
        err = (abs(lattice.w1.value)) * mpmath.mpf(10) ** (-mpmath.mp.dps + 8)
        return ComplexApprox(u, err)


def elliptic_exp(u, lattice: PeriodLattice, E: WeierstrassFiber | None = None,
                 dps: int | None = None) -> EllipticPoint:
    """Point (wp(u/2), wp'(u/2)/2) on the short model; infinity at lattice points.

    With ``E`` the point is mapped back to the model E itself.
    """
    with mpmath.workdps(dps or max(mpmath.mp.dps, 30)):
        uv = u.value if isinstance(u, ComplexApprox) else mpmath.mpc(u)
        w1, w2 = lattice.w1.value, lattice.w2.value
        b = betti_coords(ComplexApprox(uv), lattice)
        if min(b.beta1, 1 - b.beta1) < 1e-25 and min(b.beta2, 1 - b.beta2) < 1e-25:
            return EllipticPoint()
        p, dp = _wp_short(uv / 2, w1, w2, MULTI)
        rel = mpmath.mpf(10) ** (-mpmath.mp.dps + 8)
        P = EllipticPoint(ComplexApprox(p, abs(p) * rel + rel), ComplexApprox(dp / 2, abs(dp) * rel + rel))
        return E.from_short(P) if E is not None else P


# ---------------------------------------------------------------------------
# Betti coordinates and rational detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BettiPoint:
    beta1: float
    beta2: float
    err1: float = 0.0
    err2: float = 0.0

    def as_tuple(self):
        return (self.beta1, self.beta2)


@dataclass(frozen=True)
class RationalHit:
    p1: int
    p2: int
    q: int

    @property
    def coords(self):
        return Fraction(self.p1, self.q), Fraction(self.p2, self.q)

    @property
    def height(self):
        return max(max(abs(c.numerator), c.denominator) for c in self.coords)


def _real_coords(z, w1, w2):
    """Real (b1, b2) with z = b1 w1 + b2 w2 (no reduction)."""
    r = z / w1
    tau = w2 / w1
    b2 = r.imag / tau.imag
    b1 = r.real - b2 * tau.real
    return b1, b2


def betti_coords(z, lattice: PeriodLattice, reduce: bool = True) -> BettiPoint:
    """Coordinates of z in the period basis, reduced to [0, 1)^2.

    An ill-conditioned basis is first Gauss-reduced; coordinates then refer
    to the reduced basis.
    """
    zv = z.value if isinstance(z, ComplexApprox) else mpmath.mpc(z)
    zerr = z.err if isinstance(z, ComplexApprox) else mpmath.mpf(0)
    w1, w2 = lattice.w1.value, lattice.w2.value
    if abs((w2 / w1).imag) < 0.5:
        w1, w2 = _gauss_reduce(w1, w2)
    b1, b2 = _real_coords(zv, w1, w2)
    tau = w2 / w1
    lerr = max(lattice.w1.err, lattice.w2.err)
    cond = (1 + abs(tau)) / tau.imag / abs(w1)
    e = float(cond * (zerr + lerr * (abs(b1) + abs(b2) + 1))) + 1e-300
    if reduce:
        return BettiPoint(_unit(b1), _unit(b2), e, e)
    return BettiPoint(float(b1), float(b2), e, e)


def _unit(b):
    """float in [0, 1) congruent to b."""
    f = float(b - mpmath.floor(b))
    return 0.0 if f >= 1.0 else f


def detect_rational(b: BettiPoint, qmax: int, err: float | None = None) -> RationalHit | None:
    """Unique rational pair with common denominator <= qmax inside the error box.

    Returns None when there is no candidate, or when two different rational
    pairs fit (the caller should refine).
    """
    if qmax < 1:
        raise InvalidArgument("qmax must be >= 1")
    e1 = b.err1 if err is None else err
    e2 = b.err2 if err is None else err
    found = set()
    for q in range(1, qmax + 1):
        pairs = []
        for beta, e in ((b.beta1, e1), (b.beta2, e2)):
            lo, hi = math.ceil((beta - e) * q), math.floor((beta + e) * q)
            pairs.append(range(lo, hi + 1))
        for p1 in pairs[0]:
            for p2 in pairs[1]:
                found.add((Fraction(p1, q) % 1, Fraction(p2, q) % 1))
                if len(found) > 1:
                    return None
    if not found:
        return None
    c1, c2 = found.pop()
    q = math.lcm(c1.denominator, c2.denominator)
    return RationalHit(int(c1 * q), int(c2 * q), q)


def count_rational_points(points, T: int, qmax: int) -> int:
    """Number of distinct rational Betti points of height at most T."""
    if qmax < T:
        raise InvalidArgument("qmax must be at least T")
    seen = set()
    for b in points:
        hit = b if isinstance(b, RationalHit) else detect_rational(b, qmax)
        if hit is not None and hit.height <= T:
            seen.add(hit.coords)
    return len(seen)


# ---------------------------------------------------------------------------
# The Betti map of a section over the base
# ---------------------------------------------------------------------------


def _horner(coeffs, t):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


class SectionBetti:
    """Raw period and logarithm data of a family section at complex parameters.

    ``raw(t)`` returns a reduced period basis and one logarithm of sigma(t);
    continuation (choosing bases and lifts consistently) is done by callers.
    """

    def __init__(self, family, chart=0, ctx=DOUBLE):
        model = family.charts[chart]
        self.chart = chart
        self.ctx = ctx
        conv = (lambda c: float(c)) if ctx is DOUBLE else (lambda c: mpmath.mpf(c.numerator) / c.denominator)
        self.A = [conv(c) for c in model.A]
        self.B = [conv(c) for c in model.B]
        self.X = [conv(c) for c in model.X]
        self.Y = [conv(c) for c in model.Y]
        self._cache = {}

    def raw(self, t):
        key = (complex(t).real, complex(t).imag) if self.ctx is DOUBLE else None
        if key is not None and key in self._cache:
            return self._cache[key]
        ctx = self.ctx
        t = ctx.num(t)
        A, B = _horner(self.A, t), _horner(self.B, t)
        x, y = _horner(self.X, t), _horner(self.Y, t)
        w1, w2 = _period_basis(A, B, ctx)
        u = _elliptic_log_raw(x, y, A, B, w1, w2, ctx)
        out = (w1, w2, u)
        if key is not None:
            self._cache[key] = out
        return out


def _align_basis(w1, w2, p1, p2):
    """The basis of the lattice (w1, w2) closest to the previous basis (p1, p2)."""
    a1, b1 = _real_coords(p1, w1, w2)
    a2, b2 = _real_coords(p2, w1, w2)
    m = [[round(float(a1)), round(float(b1))], [round(float(a2)), round(float(b2))]]
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if abs(det) != 1:
        raise BranchTrackingError("period basis jumped; refine the step")
    n1 = m[0][0] * w1 + m[0][1] * w2
    n2 = m[1][0] * w1 + m[1][1] * w2
    shortest = min(abs(w1), abs(w2))
    if abs(n1 - p1) > 0.25 * shortest or abs(n2 - p2) > 0.25 * shortest:
        raise BranchTrackingError("period basis moved too far; refine the step")
    return n1, n2


def _align_log(u, w1, w2, prev):
    b1, b2 = _real_coords(prev - u, w1, w2)
    return u + round(float(b1)) * w1 + round(float(b2)) * w2


@dataclass
class _Sample:
    t: complex
    w1: complex
    w2: complex
    u: complex

    @property
    def beta(self):
        return _real_coords(self.u, self.w1, self.w2)


def continue_along(ev: SectionBetti, ts, start: _Sample | None = None, max_depth: int = 12):
    """Continue basis and logarithm along the polyline ``ts``.

    Segments are bisected until consecutive bases and lifts are close.
    Returns the list of samples (including inserted points).
    """
    out = []
    prev = start
    for t in ts:
        if prev is None:
            w1, w2, u = ev.raw(t)
            prev = _Sample(t, w1, w2, u)
            out.append(prev)
            continue
        out.extend(_segment(ev, prev, t, max_depth))
        prev = out[-1]
    return out


def _step(ev, prev, t):
    w1, w2, u = ev.raw(t)
    n1, n2 = _align_basis(w1, w2, prev.w1, prev.w2)
    u = _align_log(u, n1, n2, prev.u)
    s = _Sample(t, n1, n2, u)
    pb, sb = prev.beta, s.beta
    if abs(pb[0] - sb[0]) + abs(pb[1] - sb[1]) > 0.03:
        raise BranchTrackingError("Betti coordinates moved too far")
    return s


def _segment(ev, prev, t, depth):
    try:
        return [_step(ev, prev, t)]
    except BranchTrackingError:
        if depth <= 0:
            raise
    mid = (prev.t + t) / 2
    first = _segment(ev, prev, mid, depth - 1)
    return first + _segment(ev, first[-1], t, depth - 1)


def betti_path(family, ts, chart=0):
    """Betti coordinates of the section along a path (continuous lift)."""
    ev = SectionBetti(family, chart)
    return continue_along(ev, list(ts))


def _winding(poly, pt):
    """Winding number of the closed polygon ``poly`` (list of (x, y)) around pt."""
    total = 0.0
    px, py = pt
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i][0] - px, poly[i][1] - py
        x1, y1 = poly[(i + 1) % n][0] - px, poly[(i + 1) % n][1] - py
        total += math.atan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1)
    return round(total / (2 * math.pi))


def _dist_to_polygon(poly, pt):
    best = math.inf
    px, py = pt
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        dx, dy = bx - ax, by - ay
        L = dx * dx + dy * dy
        s = 0.0 if L == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L))
        best = min(best, math.hypot(ax + s * dx - px, ay + s * dy - py))
    return best


def rational_targets(bbox, qmax):
    """All (P1/q, P2/q), q <= qmax, in the box, as reduced Fraction pairs."""
    (x0, x1), (y0, y1) = bbox
    out = set()
    for q in range(1, qmax + 1):
        for p1 in range(math.ceil(x0 * q), math.floor(x1 * q) + 1):
            for p2 in range(math.ceil(y0 * q), math.floor(y1 * q) + 1):
                out.add((Fraction(p1, q), Fraction(p2, q)))
    return sorted(out)


@dataclass
class ScanHit:
    t: complex  # parameter in the chart
    chart: object
    target: tuple  # lifted target (Fraction, Fraction) or floats
    beta: BettiPoint
    hit: RationalHit | None
    radius: float = 0.0

    @property
    def t_affine(self):
        """Parameter on the chart-0 line (None for the point at infinity)."""
        if self.chart == 0:
            return self.t
        return None if self.t == 0 else 1 / self.t


@dataclass
class ScanReport:
    hits: list
    cells: int
    excluded: list  # (chart, center, radius) discs skipped around singular fibers
    samples: int
    path: list = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_real", "t_imag", "beta1", "beta2", "q", "H", "flags"])
        for h in sorted(self.hits, key=_hit_key):
            t = h.t_affine
            flags = f"chart={h.chart}" + (";infinity" if t is None else "")
            tr, ti = (float("inf"), 0.0) if t is None else (t.real, t.imag)
            q = h.hit.q if h.hit else ""
            H = h.hit.height if h.hit else ""
            w.writerow([f"{tr:.12g}", f"{ti:.12g}", f"{h.beta.beta1:.12f}", f"{h.beta.beta2:.12f}", q, H, flags])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(dict(schema="quarticlab.betti-scan/1", cells=self.cells, samples=self.samples,
                               hits=len(self.hits),
                               by_denominator={str(q): sum(1 for h in self.hits if h.hit and h.hit.q == q)
                                               for q in sorted({h.hit.q for h in self.hits if h.hit})},
                               excluded=[dict(chart=str(c), center=[z.real, z.imag], radius=r)
                                         for c, z, r in self.excluded]), indent=1, sort_keys=True)


def _hit_key(h):
    t = h.t_affine
    return (1, 0.0, 0.0) if t is None else (0, round(t.real, 9), round(t.imag, 9))


class _CellScanner:
    """Counts and locates solutions of beta(t) = target inside square cells.

    For a target v, g(t) = u(t) - v1 w1(t) - v2 w2(t) is holomorphic on a cell
    without singular fibers, and its number of zeros equals the winding
    number of the boundary image of beta around v.
    """

    def __init__(self, ev, targets_fn, bad_points, margin, min_size, gap=0.004, locate_size=0.02,
                 sing_size=1e-12):
        self.ev = ev
        self.targets_fn = targets_fn
        self.bad = bad_points
        self.margin = margin
        self.min_size = min_size
        self.gap = gap
        self.locate_size = locate_size
        # torsion values accumulate at nodal fibers, so cells around a
        # singular parameter are refined much further than elsewhere
        self.sing_size = sing_size
        self.hits = []
        self.excluded = []
        self.cells = 0
        self.samples = 0

    def _loop(self, center, hx, hy, n=4):
        c = center
        corners = [c + complex(-hx, -hy), c + complex(hx, -hy), c + complex(hx, hy), c + complex(-hx, hy)]
        pts = []
        for i in range(4):
            a, b = corners[i], corners[(i + 1) % 4]
            pts += [a + (b - a) * k / n for k in range(n)]
        pts.append(corners[0])
        samples = continue_along(self.ev, pts)
        self.samples += len(samples)
        first, last = samples[0], samples[-1]
        # after a closed loop the basis must come back (no singular fiber inside)
        if abs(first.w1 - last.w1) + abs(first.w2 - last.w2) > 1e-6 * (abs(first.w1) + abs(first.w2)):
            raise BranchTrackingError("monodromy around the cell")
        return samples

    def scan(self, center, hx, hy=None, depth=0):
        hy = hx if hy is None else hy
        size = max(hx, hy)
        near = [b for b in self.bad if abs((b - center).real) <= hx + self.margin * size
                and abs((b - center).imag) <= hy + self.margin * size]
        if near:
            if size <= self.sing_size * max(1.0, abs(center)):
                for b in near:
                    self.excluded.append((b, abs(complex(hx, hy)) * (1 + self.margin)))
                return
            return self._split(center, hx, hy, depth)
        try:
            loop = self._loop(center, hx, hy)
        except (BranchTrackingError, PrecisionExhausted, IllConditionedFiber):
            if size <= self.min_size:
                self.excluded.append((center, abs(complex(hx, hy))))
                return
            return self._split(center, hx, hy, depth)
        self.cells += 1
        poly = [(float(a), float(b)) for a, b in (smp.beta for smp in loop[:-1])]
        xs = [p[0] for p in poly]
        ys = [p[1] for p in poly]
        bbox = ((min(xs), max(xs)), (min(ys), max(ys)))
        # the safety gap shrinks with the image of the cell
        gap = min(self.gap, 0.05 * math.hypot(bbox[0][1] - bbox[0][0], bbox[1][1] - bbox[1][0]))
        inside, edge = [], []
        for v in self.targets_fn(bbox):
            vf = (float(v[0]), float(v[1]))
            if _dist_to_polygon(poly, vf) < gap:
                if size > self.min_size:
                    return self._split(center, hx, hy, depth)
                # too close to an edge to count by winding: locate it and keep
                # it only if it lies in this cell's half-open rectangle
                edge.append(v)
                continue
            k = _winding(poly, vf)
            if k < 0:
                raise BranchTrackingError("negative winding number; holomorphy violated")
            if k:
                inside.append((v, k))
        # cells holding a preimage are bisected until Newton is safe
        if inside and size > self.min_size and (size > self.locate_size or any(k > 1 for _, k in inside)):
            return self._split(center, hx, hy, depth)
        for v, k in inside:
            self._locate(center, hx, hy, loop[0], v)
        for v in edge:
            self._locate(center, hx, hy, loop[0], v, half_open=True)

    def _split(self, center, hx, hy, depth):
        for dx in (-hx / 2, hx / 2):
            for dy in (-hy / 2, hy / 2):
                self.scan(center + complex(dx, dy), hx / 2, hy / 2, depth + 1)

    def _locate(self, center, hx, hy, anchor, v, half_open=False):
        vf = (float(v[0]), float(v[1]))

        def g(s):
            d = vf[0] * s.w1 + vf[1] * s.w2
            return s.u - d

        s = continue_along(self.ev, [center], start=anchor)[-1]
        t = s.t
        step = 0
        for _ in range(80):
            h = 1e-7 * max(hx, hy, 1e-3)
            sp = continue_along(self.ev, [t + h], start=s)[-1]
            sm = continue_along(self.ev, [t - h], start=s)[-1]
            dg = (g(sp) - g(sm)) / (2 * h)
            if dg == 0:
                break
            step = g(s) / dg
            if abs(step) > max(hx, hy):
                step *= max(hx, hy) / abs(step)
            # backtracking: accept only steps that reduce |g|
            for _ in range(30):
                cand = continue_along(self.ev, [t - step], start=s)[-1]
                if abs(g(cand)) < abs(g(s)) or abs(step) < 1e-15:
                    break
                step /= 2
            s, t = cand, cand.t
            if abs(step) < 1e-13 * max(1.0, abs(t)):
                break
        if abs(g(s)) > 1e-8 * (abs(s.w1) + abs(s.w2)):
            if half_open:
                return
            raise BranchTrackingError("Newton did not converge to a Betti preimage")
        if half_open:
            d = t - center
            if not (-hx <= d.real < hx and -hy <= d.imag < hy):
                return
        elif not (abs((t - center).real) <= hx * (1 + 1e-9) and abs((t - center).imag) <= hy * (1 + 1e-9)):
            raise BranchTrackingError("Newton left the cell while locating a Betti preimage")
        b1, b2 = s.beta
        bp = BettiPoint(float(b1 - math.floor(b1)), float(b2 - math.floor(b2)), 1e-9, 1e-9)
        hit = None
        if isinstance(v[0], Fraction):
            c1, c2 = v[0] % 1, v[1] % 1
            q = math.lcm(c1.denominator, c2.denominator)
            hit = RationalHit(int(c1 * q), int(c2 * q), q)
        self.hits.append(ScanHit(t, self.ev.chart, v, bp, hit, abs(step) * 10 + 1e-12))


def _bad_points(family, chart, precision=1e-20):
    from .weierstrass import singular_fibers

    loc = singular_fibers(family, precision)
    pts = [complex(r.center) for r in loc.roots]
    if chart == 0:
        return pts
    out = [1 / p for p in pts if abs(p) > 1e-12]
    if loc.at_infinity:
        out.append(0j)
    return out


def _grid(center, half, cells, offset=(0.3719, 0.2113)):
    """Cells covering the square |Re|, |Im| <= half around center.

    The grid is shifted by a fraction of a cell so that the real and
    imaginary axes (where real-symmetric preimages sit) are never edges.
    Returns the cell list and the covered rectangle.
    """
    step = 2 * half / cells
    x0 = center.real - half - offset[0] * step
    y0 = center.imag - half - offset[1] * step
    n = cells + 1
    out = [complex(x0 + (a + 0.5) * step, y0 + (b + 0.5) * step) for a in range(n) for b in range(n)]
    return out, step / 2, (x0, x0 + n * step, y0, y0 + n * step)


def covering_scan(family, targets_fn, R=1.5, cells=12, margin=0.05, min_size=1e-3):
    """Scan the whole parameter line: |Re t|, |Im t| <= R in chart 0, and the
    complementary square |Re t'|, |Im t'| <= 1/R in the chart at infinity.

    Points covered by both squares are reported by chart 0 only.
    """
    hits, excluded = [], []
    ncells = nsamp = 0
    covered = None
    for chart, half in ((0, R), ("inf", 1 / R)):
        ev = SectionBetti(family, chart)
        sc = _CellScanner(ev, targets_fn, _bad_points(family, chart), margin, min_size)
        centers, h, rect = _grid(0j, half, cells)
        if chart == 0:
            covered = rect
        for c in centers:
            sc.scan(c, h)
        for hit in sc.hits:
            if chart == "inf":
                t = hit.t_affine
                if t is not None and covered[0] <= t.real <= covered[1] and covered[2] <= t.imag <= covered[3]:
                    continue
            hits.append(hit)
        excluded += [(chart, c, r) for c, r in sc.excluded]
        ncells += sc.cells
        nsamp += sc.samples
    return ScanReport(hits, ncells, excluded, nsamp)


def base_betti_scan(family, section=None, path=None, qmax: int = 6, R: float = 1.5, cells: int = 12,
                    margin: float = 0.05) -> ScanReport:
    """Rational points of the Betti map of the family section.

    With ``path`` (a sequence of complex parameters in chart 0) the Betti
    coordinates are continued along it and every sample is tested with
    :func:`detect_rational`.  Without a path the whole base is covered by
    cells and every rational target with denominator <= qmax is located.
    """
    if qmax < 1:
        raise InvalidArgument("qmax must be >= 1")
    if path is not None:
        samples = betti_path(family, path)
        rows = []
        for s in samples:
            b1, b2 = s.beta
            bp = BettiPoint(float(b1 - math.floor(b1)), float(b2 - math.floor(b2)), 1e-9, 1e-9)
            rows.append(ScanHit(s.t, 0, (b1, b2), bp, detect_rational(bp, qmax)))
        return ScanReport([r for r in rows if r.hit], 0, [], len(samples), path=rows)
    return covering_scan(family, lambda bbox: rational_targets(bbox, qmax), R, cells, margin)


def match_torsion_values(report: ScanReport, roots_by_order: dict, rel_tol: float = 1e-9):
    """Compare scan hits with torsion values given per exact order.

    ``roots_by_order`` maps q to the roots (complex or AlgebraicNumber, None
    for t = infinity) of the primitive torsion polynomial of order q.  A hit
    with denominator q matches a root of order q when they agree to
    ``rel_tol`` relative to max(1, |t|).  Returns (matched pairs, unmatched
    hits, missed roots).
    """
    matched, extra = [], []
    pool = {q: [(None if r is None else complex(getattr(r, "center", r)), r) for r in rs]
            for q, rs in roots_by_order.items()}
    used = set()
    for h in sorted(report.hits, key=_hit_key):
        q = h.hit.q if h.hit else None
        t = h.t_affine
        best = None
        for i, (c, r) in enumerate(pool.get(q, [])):
            if (q, i) in used:
                continue
            if c is None or t is None:
                ok = c is None and t is None
                d = 0.0
            else:
                d = abs(c - t) / max(1.0, abs(c))
                ok = d < rel_tol
            if ok and (best is None or d < best[0]):
                best = (d, i, r)
        if best is None:
            extra.append(h)
        else:
            used.add((q, best[1]))
            matched.append((h, best[2]))
    missed = [r for q, rs in pool.items() for i, (_, r) in enumerate(rs) if (q, i) not in used]
    return matched, extra, missed


def jacobian_rank(family, t, chart=0, h=1e-6, tol=1e-6):
    """Numerical rank of the real 2x2 Jacobian of beta at t (finite differences)."""
    ev = SectionBetti(family, chart)
    base = continue_along(ev, [t])[0]
    cols = []
    for d in (h, 1j * h):
        sp = continue_along(ev, [t + d], start=base)[-1]
        sm = continue_along(ev, [t - d], start=base)[-1]
        bp, bm = sp.beta, sm.beta
        cols.append(((bp[0] - bm[0]) / (2 * h), (bp[1] - bm[1]) / (2 * h)))
    J = np.array([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]], dtype=float)
    s = np.linalg.svd(J, compute_uv=False)
    return int(sum(1 for v in s if v > tol * max(s[0], 1e-300))), J


def fiber_cardinality_check(family, region, targets, chart=0, cells=8, margin=0.05):
    """Number of t in the square region with beta(t) = v (mod Z^2), per target v.

    ``region`` is (center, half_width).  Returns (max count, counts).
    """
    center, half = region
    counts = []
    ev = SectionBetti(family, chart)
    bad = _bad_points(family, chart)
    for v in targets:
        v = (float(v[0]) % 1.0, float(v[1]) % 1.0)

        def tf(bbox, v=v):
            (x0, x1), (y0, y1) = bbox
            return [(v[0] + i, v[1] + j) for i in range(math.floor(x0 - v[0]), math.ceil(x1 - v[0]) + 1)
                    for j in range(math.floor(y0 - v[1]), math.ceil(y1 - v[1]) + 1)
                    if x0 <= v[0] + i <= x1 and y0 <= v[1] + j <= y1]

        sc = _CellScanner(ev, tf, bad, margin, 1e-3)
        centers, h, _ = _grid(center, half, cells)
        for c in centers:
            sc.scan(c, h)
        counts.append(len(sc.hits))
    return (max(counts) if counts else 0), counts
