"""Weierstrass models of marked plane cubics, the group law and torsion.

Coefficient domains form a closed set: ``Fraction`` (Q), elements of the
sympy rational function field Q(t), :class:`NumberFieldElement` (Q(alpha)
for an algebraic parameter) and :class:`ComplexApprox`.  All field code
here is written once against the arithmetic operators; the only domain
specific primitive is :func:`is_zero`.

Weierstrass models are in long form

    y^2 + a1 x y + a3 y = x^3 + a2 x^2 + a4 x + a6,

short models have a1 = a2 = a3 = 0, a4 = A, a6 = B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction

import mpmath
import sympy
from sympy.polys.fields import FracElement, field as sympy_field

from .errors import (DegenerateFamily, InternalConsistencyError, InvalidArgument, InvalidPoint,
                     MarkedPointSingular, ReducibleFiber, SectionTorsion, UnsupportedDomain)
from .exact import (ComplexApprox, MultiPoly, NumberFieldElement, isolate_roots,
                    poly_to_sympy, sympy_to_coeffs, to_fraction)

QT, T = sympy_field("t", sympy.QQ)

NUMERIC_REL_TOL = mpmath.mpf(10) ** -20


def is_zero(x) -> bool:
    """Exact zero test; for ComplexApprox, 'cannot be distinguished from zero'."""
    if isinstance(x, ComplexApprox):
        return x.contains_zero()
    if isinstance(x, NumberFieldElement):
        return x.is_zero()
    return x == 0


def is_exact(x) -> bool:
    return not isinstance(x, (ComplexApprox, complex, float, mpmath.mpc, mpmath.mpf))


def _magnitude(x):
    """Rough size of a domain element, used to pick well-conditioned pivots."""
    if isinstance(x, ComplexApprox):
        return abs(x.value) - x.err
    if isinstance(x, NumberFieldElement):
        return abs(complex(x)) if not x.is_zero() else 0
    if isinstance(x, FracElement):
        return 0 if x == 0 else 1
    return abs(x)


def to_qt(c):
    """Lift a Fraction or a constant-first coefficient list into Q(t)."""
    if isinstance(c, FracElement):
        return c
    if isinstance(c, (list, tuple)):
        acc = QT(0)
        for k in reversed(c):
            acc = acc * T + QT(sympy.Rational(to_fraction(k).numerator, to_fraction(k).denominator))
        return acc
    c = to_fraction(c)
    return QT(sympy.Rational(c.numerator, c.denominator))


def qt_to_coeffs(f):
    """Polynomial element of Q(t) -> constant-first Fraction list."""
    if f == 0:
        return [Fraction(0)]
    num, den = f.numer, f.denom
    if den.degree() > 0:
        raise InvalidArgument("not a polynomial in t")
    p = sympy.Poly(num.as_expr(), sympy.Symbol("t"), domain="QQ")
    d = to_fraction(den.LC)
    return [c / d for c in sympy_to_coeffs(p)]


# ---------------------------------------------------------------------------
# Ternary cubics over a generic field
# ---------------------------------------------------------------------------

_CUBIC_MONOMIALS = [(i, j, 3 - i - j) for i in range(3, -1, -1) for j in range(3 - i, -1, -1)]


def _pw(v, n):
    # sympy field elements refuse 0**0
    return 1 if n == 0 else v ** n


def cubic_eval(C, p):
    total = 0
    for (i, j, k), c in C.items():
        total = total + c * _pw(p[0], i) * _pw(p[1], j) * _pw(p[2], k)
    return total


def cubic_gradient(C, p):
    out = []
    for v in range(3):
        g = 0
        for e, c in C.items():
            if e[v]:
                e2 = list(e)
                e2[v] -= 1
                g = g + c * e[v] * _pw(p[0], e2[0]) * _pw(p[1], e2[1]) * _pw(p[2], e2[2])
        out.append(g)
    return out


def _poly_mul(f, g):
    out = {}
    for e1, c1 in f.items():
        for e2, c2 in g.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out[e] + c1 * c2 if e in out else c1 * c2
    return out


def _linear_substitute(C, M):
    """C(M v) for a 3x3 matrix M (rows indexed by old coordinates)."""
    forms = [{(1, 0, 0): M[r][0], (0, 1, 0): M[r][1], (0, 0, 1): M[r][2]} for r in range(3)]
    out = {}
    for (i, j, k), c in C.items():
        term = {(0, 0, 0): c}
        for form, power in zip(forms, (i, j, k)):
            for _ in range(power):
                term = _poly_mul(term, form)
        for e, v in term.items():
            out[e] = out[e] + v if e in out else v
    return out


def _det3(M):
    return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
            - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
            + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]))


def _inverse3(M):
    det = _det3(M)
    if is_zero(det):
        raise InternalConsistencyError("singular coordinate change")
    cof = [[None] * 3 for _ in range(3)]
    for r in range(3):
        for c in range(3):
            rows = [x for x in range(3) if x != r]
            cols = [x for x in range(3) if x != c]
            minor = M[rows[0]][cols[0]] * M[rows[1]][cols[1]] - M[rows[0]][cols[1]] * M[rows[1]][cols[0]]
            cof[r][c] = minor if (r + c) % 2 == 0 else -minor
    return [[cof[c][r] / det for c in range(3)] for r in range(3)]


def _matvec(M, v):
    return tuple(M[r][0] * v[0] + M[r][1] * v[1] + M[r][2] * v[2] for r in range(3))


# ---------------------------------------------------------------------------
# Points and models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EllipticPoint:
    x: object = None
    y: object = None

    @property
    def is_infinity(self):
        return self.x is None

    def __eq__(self, other):
        if not isinstance(other, EllipticPoint):
            return NotImplemented
        if self.is_infinity or other.is_infinity:
            return self.is_infinity and other.is_infinity
        return is_zero(self.x - other.x) and is_zero(self.y - other.y)

    __hash__ = None

    def __repr__(self):
        return "EllipticPoint(oo)" if self.is_infinity else f"EllipticPoint({self.x}, {self.y})"


INFINITY = EllipticPoint()


@dataclass(frozen=True, eq=False)
class CubicTransform:
    """Birational map between a marked plane cubic and a Weierstrass model.

    ``M`` sends the normalized coordinates (X, Y, Z) to the original plane
    coordinates; in normalized coordinates the marked point is (0:1:0) with
    tangent Z = 0.
    """

    cubic: dict
    marked: tuple
    M: tuple
    Minv: tuple
    flex: bool
    data: dict

    def from_cubic(self, p) -> EllipticPoint:
        X, Y, Z = _matvec(self.Minv, p)
        d = self.data
        if is_zero(Z):
            if is_zero(X):
                return INFINITY
            if self.flex:
                raise InvalidPoint("point is not on the cubic")
            return EllipticPoint(X * 0, d["r"] / (4 * d["b"] ** 2))
        x, y = X / Z, Y / Z
        if self.flex:
            a, c = d["a"], d["c"]
            return EllipticPoint(-a * c * x, a * c * c * y)
        b = d["b"]
        eta = 2 * d["c"] * y + _horner(d["B"], x)
        v = eta - _horner(d["P"], x)
        return EllipticPoint(-v / (2 * b), x * v / (2 * b))

    def to_cubic(self, P: EllipticPoint):
        if P.is_infinity:
            return tuple(self.marked)
        d = self.data
        if self.flex:
            a, c = d["a"], d["c"]
            x = -P.x / (a * c)
            y = P.y / (a * c * c)
        else:
            b, c = d["b"], d["c"]
            if is_zero(P.x):
                r, s = d["r"], d["s"]
                if is_zero(r) or is_zero(P.y - r / (4 * b * b)):
                    return _matvec(self.M, (b, -d["a"], b * 0))
                x = -s / r
                eta = _horner(d["P"], x)
            else:
                x = -P.y / P.x
                eta = -2 * b * P.x + _horner(d["P"], x)
            y = (eta - _horner(d["B"], x)) / (2 * c)
        return _matvec(self.M, (x, y, x * 0 + 1))


def _horner(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass(frozen=True, eq=False)
class WeierstrassFiber:
    a1: object
    a2: object
    a3: object
    a4: object
    a6: object
    transform: CubicTransform | None = None

    @classmethod
    def short(cls, A, B, transform=None):
        z = A * 0
        return cls(z, z, z, A, B, transform)

    # invariants ---------------------------------------------------------
    @property
    def b2(self):
        return self.a1 * self.a1 + 4 * self.a2

    @property
    def b4(self):
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self):
        return self.a3 * self.a3 + 4 * self.a6

    @property
    def b8(self):
        a1, a2, a3, a4, a6 = self.a1, self.a2, self.a3, self.a4, self.a6
        return (a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4)

    @property
    def c4(self):
        return self.b2 * self.b2 - 24 * self.b4

    @property
    def c6(self):
        return -self.b2 ** 3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self):
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    def is_short(self):
        return all(is_zero(v) for v in (self.a1, self.a2, self.a3))

    def is_singular(self):
        return is_zero(self.discriminant)

    def short_form(self):
        """(A, B) of y^2 = x^3 + A x + B obtained by x -> 36x + 3 b2, y -> 108(2y + a1 x + a3)."""
        if self.is_short():
            return self.a4, self.a6
        return -27 * self.c4, -54 * self.c6

    def short_model(self) -> "WeierstrassFiber":
        A, B = self.short_form()
        return WeierstrassFiber.short(A, B)

    def to_short(self, P: EllipticPoint) -> EllipticPoint:
        if P.is_infinity or self.is_short():
            return P
        return EllipticPoint(36 * P.x + 3 * self.b2, 108 * (2 * P.y + self.a1 * P.x + self.a3))

    def from_short(self, P: EllipticPoint) -> EllipticPoint:
        if P.is_infinity or self.is_short():
            return P
        x = (P.x - 3 * self.b2) / 36
        y = (P.y / 108 - self.a1 * x - self.a3) / 2
        return EllipticPoint(x, y)

    # points -------------------------------------------------------------
    def residual(self, P: EllipticPoint):
        x, y = P.x, P.y
        return (y * y + self.a1 * x * y + self.a3 * y
                - (x ** 3 + self.a2 * x * x + self.a4 * x + self.a6))

    def contains(self, P: EllipticPoint) -> bool:
        if P.is_infinity:
            return True
        r = self.residual(P)
        if isinstance(r, ComplexApprox):
            scale = 1 + abs(P.x.value if isinstance(P.x, ComplexApprox) else P.x) ** 3
            return abs(r.value) <= r.err + NUMERIC_REL_TOL * scale
        return is_zero(r)

    def check(self, P: EllipticPoint):
        if not self.contains(P):
            raise InvalidPoint(f"{P!r} is not on the curve")

    def neg(self, P: EllipticPoint) -> EllipticPoint:
        if P.is_infinity:
            return P
        return EllipticPoint(P.x, -P.y - self.a1 * P.x - self.a3)

    def add(self, P: EllipticPoint, Q: EllipticPoint, check: bool = True) -> EllipticPoint:
        if check:
            self.check(P)
            self.check(Q)
        if P.is_infinity:
            return Q
        if Q.is_infinity:
            return P
        a1, a2, a3, a4, a6 = self.a1, self.a2, self.a3, self.a4, self.a6
        x1, y1, x2, y2 = P.x, P.y, Q.x, Q.y
        if is_zero(x1 - x2):
            if is_zero(y1 + y2 + a1 * x2 + a3):
                return INFINITY
            den = 2 * y1 + a1 * x1 + a3
            lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / den
            nu = (-x1 ** 3 + a4 * x1 + 2 * a6 - a3 * y1) / den
        else:
            lam = (y2 - y1) / (x2 - x1)
            nu = (y1 * x2 - y2 * x1) / (x2 - x1)
        x3 = lam * lam + a1 * lam - a2 - x1 - x2
        y3 = -(lam + a1) * x3 - nu - a3
        return EllipticPoint(x3, y3)

    def sub(self, P, Q, check=True):
        return self.add(P, self.neg(Q), check)

    def mul(self, m: int, P: EllipticPoint, check: bool = True) -> EllipticPoint:
        if check:
            self.check(P)
        if m < 0:
            return self.mul(-m, self.neg(P), check=False)
        out, base = INFINITY, P
        while m:
            if m & 1:
                out = self.add(out, base, check=False)
            base = self.add(base, base, check=False)
            m >>= 1
        return out


def add_points(E: WeierstrassFiber, P: EllipticPoint, Q: EllipticPoint) -> EllipticPoint:
    return E.add(P, Q)


def scalar_mul(E: WeierstrassFiber, m: int, P: EllipticPoint) -> EllipticPoint:
    return E.mul(m, P)


# ---------------------------------------------------------------------------
# Marked cubic -> Weierstrass
# ---------------------------------------------------------------------------


def _pick(values):
    """Index of the entry best separated from zero."""
    best, idx = None, None
    for i, v in enumerate(values):
        if is_zero(v):
            continue
        m = _magnitude(v)
        if best is None or m > best:
            best, idx = m, i
    return idx


def nagell_transform(C: dict, O) -> WeierstrassFiber:
    """Weierstrass model of the plane cubic ``C`` with ``O`` sent to infinity.

    ``C`` maps exponent triples to coefficients in one field; ``O`` is a
    point of C with coordinates in the same field.  The returned fiber
    carries a :class:`CubicTransform` for moving points back and forth.
    """
    O = tuple(O)
    if not is_zero(cubic_eval(C, O)):
        raise InvalidPoint("marked point is not on the cubic")
    g = cubic_gradient(C, O)
    k = _pick(g)
    if k is None:
        raise MarkedPointSingular("marked point is a singular point of the cubic")
    one = g[k] / g[k]
    zero = one * 0
    # kernel of the gradient: e_i - (g_i/g_k) e_k; pick the one far from O
    cands = []
    for i in range(3):
        if i == k:
            continue
        v = [zero, zero, zero]
        v[i] = one
        v[k] = -g[i] / g[k]
        cross = (v[1] * O[2] - v[2] * O[1], v[2] * O[0] - v[0] * O[2], v[0] * O[1] - v[1] * O[0])
        cands.append((v, cross))
    best = None
    for v, cross in cands:
        idx = _pick(cross)
        if idx is None:
            continue
        score = _magnitude(cross[idx])
        if best is None or score > best[0]:
            best = (score, v)
    if best is None:
        raise InternalConsistencyError("tangent line degenerate at the marked point")
    v = best[1]
    ek = [zero, zero, zero]
    ek[k] = one
    M = tuple(tuple((v[r], O[r], ek[r])) for r in range(3))
    Minv = _inverse3(M)
    Cn = _linear_substitute(C, M)

    def co(e):
        return Cn.get(e, zero)

    for e in ((0, 3, 0), (1, 2, 0)):
        if not is_zero(co(e)):
            raise InternalConsistencyError("normalization failed to place the marked point")
    a, b, c = co((3, 0, 0)), co((2, 1, 0)), co((0, 2, 1))
    c1, c2, c3, c4, c5 = co((2, 0, 1)), co((1, 1, 1)), co((1, 0, 2)), co((0, 1, 2)), co((0, 0, 3))
    if is_zero(c):
        raise MarkedPointSingular("marked point is a singular point of the cubic")
    if is_zero(b):
        if is_zero(a):
            raise ReducibleFiber("the tangent line at the marked point is a component")
        data = dict(a=a, c=c)
        a1, a3 = -c2, c4 * a * c
        a2, a4, a6 = -c1 * c, c3 * a * c * c, -c5 * a * a * c ** 3
        tr = CubicTransform(C, O, M, tuple(map(tuple, Minv)), True, data)
        return WeierstrassFiber(a1, a2, a3, a4, a6, tr)
    Bx = [c4, c2, b]
    Ax = [c5, c3, c1, a]
    d0 = c4 * c4 - 4 * c * c5
    d1 = 2 * c4 * c2 - 4 * c * c3
    d2 = c2 * c2 + 2 * b * c4 - 4 * c * c1
    d3 = 2 * b * c2 - 4 * c * a
    p = d3 / (2 * b)
    q = (d2 - p * p) / (2 * b)
    r = d1 - 2 * p * q
    s = d0 - q * q
    data = dict(a=a, b=b, c=c, B=Bx, A=Ax, P=[q, p, b], r=r, s=s)
    tr = CubicTransform(C, O, M, tuple(map(tuple, Minv)), False, data)
    E = WeierstrassFiber(-p / b, -q / b, -r / (4 * b * b), -s / (4 * b * b), zero, tr)
    return E


def cubic_is_reducible_over_q(C: dict) -> bool:
    x, y, z = sympy.symbols("x y z")
    expr = sum(sympy.Rational(to_fraction(c).numerator, to_fraction(c).denominator) * x**i * y**j * z**k
               for (i, j, k), c in C.items())
    _, facs = sympy.factor_list(expr, x, y, z)
    return not (len(facs) == 1 and facs[0][1] == 1)


def ternary_cubic_is_singular(C: dict) -> bool:
    """Exact test over Q: do the three partials of C share a projective zero?

    Uses the Groebner basis of the partials; the cubic is singular iff the
    ideal is not irrelevant, i.e. its saturation is not the unit ideal in
    any affine chart.
    """
    x, y, z = sympy.symbols("x y z")
    expr = sum(sympy.Rational(to_fraction(c).numerator, to_fraction(c).denominator) * x**i * y**j * z**k
               for (i, j, k), c in C.items())
    parts = [sympy.diff(expr, v) for v in (x, y, z)]
    for chart in ((x, 1), (y, 1), (z, 1)):
        sub = [sympy.expand(p.subs(chart[0], 1)) for p in parts]
        gens = [v for v in (x, y, z) if v != chart[0]]
        G = sympy.groebner(sub, *gens, order="lex")
        if not (len(G.exprs) == 1 and G.exprs[0] == 1):
            return True
    return False


# ---------------------------------------------------------------------------
# Division polynomials and torsion
# ---------------------------------------------------------------------------


def division_values(A, B, x, m_max: int):
    """Values f_0..f_{m_max} at x of the reduced division polynomials.

    psi_m = f_m for odd m and psi_m = 2 y f_m for even m on y^2 = x^3 + A x + B.
    The doubling step f_2k = f_k (f_{k+2} f_{k-1}^2 - f_{k-2} f_{k+1}^2) holds in
    both parities; the odd step carries a factor 16 F^2 on the even-indexed pair.
    Works for any ring elements (numbers, sympy Polys).
    """
    F = x ** 3 + A * x + B
    one = x ** 0
    f = [x * 0, one, one,
         3 * x ** 4 + 6 * A * x ** 2 + 12 * B * x - A * A,
         2 * (x ** 6 + 5 * A * x ** 4 + 20 * B * x ** 3 - 5 * A * A * x ** 2 - 4 * A * B * x - 8 * B * B - A ** 3)]
    F2 = 16 * F * F
    n = 5
    while n <= m_max:
        k = n // 2
        if n % 2:
            if k % 2 == 0:
                val = F2 * f[k + 2] * f[k] ** 3 - f[k - 1] * f[k + 1] ** 3
            else:
                val = f[k + 2] * f[k] ** 3 - F2 * f[k - 1] * f[k + 1] ** 3
        else:
            val = f[k] * (f[k + 2] * f[k - 1] ** 2 - f[k - 2] * f[k + 1] ** 2)
        f.append(val)
        n += 1
    return f[: m_max + 1]


def division_polynomial(A, B, m: int):
    """psi_m as a sympy expression in x, y with y^2 reduced (short model)."""
    x, y = sympy.symbols("x y")
    f = division_values(sympy.sympify(A), sympy.sympify(B), x, max(m, 4))[m]
    f = sympy.expand(f)
    return f if m % 2 else sympy.expand(2 * y * f)


def kills(E: WeierstrassFiber, P: EllipticPoint, m: int) -> bool:
    """Division-polynomial test for m P = O."""
    if P.is_infinity:
        return True
    S = E.short_model()
    Ps = E.to_short(P)
    A, B = S.a4, S.a6
    if is_zero(Ps.y):
        return m % 2 == 0
    fm = division_values(A, B, Ps.x, max(m, 4))[m]
    return is_zero(fm)


def torsion_order(E: WeierstrassFiber, P: EllipticPoint, m_max: int = 12):
    """Exact order of P if it is at most m_max, else None.

    Repeated addition and division polynomials run side by side for
    m <= 12; a disagreement raises InternalConsistencyError.
    """
    if m_max < 1:
        raise InvalidArgument("m_max must be positive")
    for v in (P.x, P.y, E.a4, E.a6, E.a1):
        if v is not None and not is_exact(v):
            raise UnsupportedDomain("torsion_order needs an exact coefficient domain")
    E.check(P)
    by_addition = None
    Q = P
    for k in range(1, m_max + 1):
        if Q.is_infinity:
            by_addition = k
            break
        Q = E.add(Q, P, check=False)
    by_division = None
    for k in range(1, min(m_max, 12) + 1):
        if kills(E, P, k):
            by_division = k
            break
    if min(m_max, 12) == m_max or (by_addition is not None and by_addition <= 12):
        if by_division != by_addition:
            raise InternalConsistencyError(
                f"torsion tests disagree: addition {by_addition}, division polynomials {by_division}")
    return by_addition


# ---------------------------------------------------------------------------
# Families over Q(t)
# ---------------------------------------------------------------------------


def _sympy_poly(f):
    """Element of Q(t) with trivial denominator -> sympy Poly over QQ."""
    return poly_to_sympy(qt_to_coeffs(f))


def _valuation(p, pi):
    if p.is_zero:
        return math.inf
    v = 0
    while True:
        q, r = p.div(pi)
        if not r.is_zero:
            return v
        p, v = q, v + 1


def _split(f):
    """Q(t) element -> (numerator Poly, denominator Poly) over QQ."""
    t = sympy.Symbol("t")
    n = sympy.Poly(f.numer.as_expr(), t, domain="QQ")
    d = sympy.Poly(f.denom.as_expr(), t, domain="QQ")
    return n, d


def minimal_short_model(A, B, X, Y):
    """Rescale (A, B, X, Y) over Q(t) to polynomial, minimal data.

    A rescaling by u multiplies A, B, X, Y by u^4, u^6, u^2, u^3.  Each
    irreducible factor pi of the numerators and denominators of A, B is
    removed to the extent pi^4 | A and pi^6 | B.  A rational constant then
    makes A and B integral.  Returns sympy Polys (A, B, X, Y) and the total
    scaling u as an element of Q(t).
    """
    nA, dA = _split(A)
    nB, dB = _split(B)
    primes = set()
    for p in (nA, dA, nB, dB):
        if p.degree() > 0:
            for fac, _ in sympy.factor_list(p)[1]:
                primes.add(fac.monic())
    u = QT(1)
    for pi in sorted(primes, key=lambda p: (p.degree(), str(p))):
        vA = _valuation(nA, pi) - _valuation(dA, pi)
        vB = _valuation(nB, pi) - _valuation(dB, pi)
        e = min(vA // 4 if vA != math.inf else math.inf, vB // 6 if vB != math.inf else math.inf)
        if e != math.inf and e != 0:
            u = u * to_qt(sympy_to_coeffs(pi)) ** (-e)
    den = 1
    for f in (A * u ** 4, B * u ** 6):
        for c in qt_to_coeffs(f):
            den = math.lcm(den, c.denominator)
    u = u * den
    # strip constant factors p with p^4 | A and p^6 | B (small primes only)
    cA = _content(qt_to_coeffs(A * u ** 4))
    cB = _content(qt_to_coeffs(B * u ** 6))
    g = math.gcd(cA, cB)
    if g > 1:
        lam = Fraction(1)
        for prime, _ in sympy.factorint(g, limit=10**5).items():
            if prime > 10**5:
                continue
            e = min(_pval(cA, prime) // 4 if cA else 10**9, _pval(cB, prime) // 6 if cB else 10**9)
            lam /= prime ** e
        u = u * to_qt(lam)
    return A * u ** 4, B * u ** 6, X * u ** 2, Y * u ** 3, u


def _content(coeffs):
    g = 0
    for c in coeffs:
        g = math.gcd(g, int(c))
    return g


def _pval(n, p):
    v = 0
    while n and n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True, eq=False)
class ChartModel:
    """Short Weierstrass data of one chart of a fibration, polynomial in the parameter."""

    chart: object
    A: tuple
    B: tuple
    X: tuple
    Y: tuple
    scale: object  # Q(t) element u with (A, B) = (u^4, u^6) * short form of the Nagell model

    @cached_property
    def discriminant(self):
        A = poly_to_sympy(self.A)
        B = poly_to_sympy(self.B)
        return tuple(sympy_to_coeffs(-16 * (4 * A ** 3 + 27 * B ** 2)))

    def fiber(self, t):
        return WeierstrassFiber.short(_horner(self.A, t), _horner(self.B, t))

    def section(self, t):
        return EllipticPoint(_horner(self.X, t), _horner(self.Y, t))


@dataclass(frozen=True, eq=False)
class FibrationFamily:
    """The elliptic fibration cut by the planes through ``axis``.

    ``index`` is 1 for the pencil through L1 (parameter z/w) and 2 for the
    pencil through L2 (parameter x/y).
    """

    surface: object
    axis: str
    index: int
    charts: dict
    cubics: dict

    @property
    def chart0(self) -> ChartModel:
        return self.charts[0]

    @property
    def chart_inf(self) -> ChartModel:
        return self.charts["inf"]

    def discriminant(self, chart=0):
        return self.charts[chart].discriminant


@dataclass(frozen=True, eq=False)
class SectionData:
    fibration: int
    family: FibrationFamily
    zero: EllipticPoint = INFINITY

    def at(self, t, chart=0):
        return self.family.charts[chart].section(t)


def _family_chart(S, axis, chart):
    from .surface import residual_cubic

    fam = residual_cubic(S, axis, chart)
    C = {e: to_qt(c) for e, c in fam.cubic.items()}
    O = tuple(to_qt(list(c)) for c in fam.spec["zero"])
    Sp = tuple(to_qt(list(c)) for c in fam.spec["section"])
    E = nagell_transform(C, O)
    P = E.to_short(E.transform.from_cubic(Sp))
    A, B = E.short_form()
    if E.short_model().is_singular():
        raise DegenerateFamily("discriminant vanishes identically")
    A, B, X, Y, u = minimal_short_model(A, B, P.x, P.y)
    try:
        coeffs = [tuple(qt_to_coeffs(f)) for f in (A, B, X, Y)]
    except InvalidArgument as exc:
        raise InternalConsistencyError("the section meets the zero section") from exc
    return ChartModel(chart, *coeffs, u), fam


def fibration_family(S, axis: str) -> FibrationFamily:
    """Weierstrass family of the pencil through ``axis``, in both charts."""
    charts, cubics = {}, {}
    for chart in (0, "inf"):
        charts[chart], cubics[chart] = _family_chart(S, axis, chart)
    return FibrationFamily(S, axis, 1 if axis == "L1" else 2, charts, cubics)


def section_data(family: FibrationFamily) -> SectionData:
    return SectionData(family.index, family)


@dataclass(frozen=True)
class SingularLocus:
    roots: tuple  # AlgebraicNumbers (chart 0 parameter), one per distinct fiber
    multiplicities: tuple
    at_infinity: bool
    order_at_infinity: int

    @property
    def count(self):
        return len(self.roots) + (1 if self.at_infinity else 0)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return self.count


def singular_fibers(family: FibrationFamily, precision=1e-30) -> SingularLocus:
    disc = list(family.discriminant(0))
    if not any(disc):
        raise DegenerateFamily("discriminant vanishes identically")
    roots = isolate_roots(disc, precision)
    disc_inf = list(family.discriminant("inf"))
    order_inf = next(i for i, c in enumerate(disc_inf) if c)
    return SingularLocus(tuple(roots), tuple(r.multiplicity for r in roots), order_inf > 0, order_inf)


# torsion values ------------------------------------------------------------


def _section_division_values(model: ChartModel, m_max: int):
    A, B = poly_to_sympy(model.A), poly_to_sympy(model.B)
    X, Y = poly_to_sympy(model.X), poly_to_sympy(model.Y)
    f = division_values(A, B, X, max(m_max, 4))
    out = []
    for m in range(m_max + 1):
        out.append(f[m] if m % 2 else 2 * Y * f[m])
    return out


@dataclass(frozen=True)
class TorsionValueData:
    m: int
    poly: tuple  # constant-first coefficients of T_m
    primitive: tuple  # T_m with the T_d (d | m, d < m) factors removed
    excluded: tuple  # irreducible factors shared with the discriminant, removed
    at_infinity: bool  # whether t = oo is a torsion value of order dividing m
    infinity_primitive: bool  # whether t = oo has order exactly m


def _strip(p, q):
    while True:
        g = sympy.gcd(p, q)
        if g.degree() < 1:
            return p
        p = sympy.quo(p, g)


def torsion_value_data(family: FibrationFamily, m_max: int) -> list:
    """T_m and its primitive part for m = 1..m_max."""
    if m_max < 1:
        raise InvalidArgument("m_max must be positive")
    out = []
    vals0 = _section_division_values(family.chart0, m_max)
    vals_inf = _section_division_values(family.chart_inf, m_max)
    disc = poly_to_sympy(family.discriminant(0))
    disc_inf = poly_to_sympy(family.discriminant("inf"))
    tsym = sympy.Symbol("t")
    polys = {}
    for m in range(1, m_max + 1):
        W = vals0[m]
        if W.is_zero:
            raise SectionTorsion(f"the section is identically {m}-torsion")
        excluded = []
        for fac, _ in sympy.factor_list(sympy.gcd(W, disc))[1]:
            if fac.degree() > 0:
                excluded.append(tuple(sympy_to_coeffs(fac.monic())))
        Tm = _strip(W, disc).monic() if W.degree() > 0 else sympy.Poly(1, tsym, domain="QQ")
        polys[m] = Tm
        prim = Tm
        for d in range(1, m):
            if m % d == 0:
                prim = _strip(prim, polys[d])
        Winf = vals_inf[m]
        good_inf = disc_inf.eval(0) != 0
        at_inf = good_inf and Winf.eval(0) == 0
        inf_prim = at_inf and not any(out[d - 1].at_infinity for d in range(1, m) if m % d == 0)
        out.append(TorsionValueData(m, tuple(sympy_to_coeffs(Tm)), tuple(sympy_to_coeffs(prim)),
                                    tuple(excluded), at_inf, inf_prim))
    return out


def torsion_value_polynomial(family: FibrationFamily, section: SectionData | None, m: int,
                             primitive: bool = False) -> MultiPoly:
    """T_m(t): its roots are the parameters where m sigma(t) = O on a smooth fiber."""
    if m < 1:
        raise InvalidArgument("m must be positive")
    if section is not None and section.family is not family:
        raise InvalidArgument("section belongs to another family")
    data = torsion_value_data(family, m)[-1]
    return MultiPoly.from_univariate(list(data.primitive if primitive else data.poly))


def torsion_values(family: FibrationFamily, m: int, precision=1e-30, primitive: bool = True):
    """Certified roots of T_m (or of its primitive part) as AlgebraicNumbers."""
    data = torsion_value_data(family, m)[-1]
    coeffs = list(data.primitive if primitive else data.poly)
    if len(coeffs) <= 1:
        return []
    return isolate_roots(coeffs, precision)


def fiber_cubic_at(family: FibrationFamily, t, chart=0):
    """The residual plane cubic of the given chart at a parameter value in any domain."""
    fam = family.cubics[chart]
    return {e: _horner(list(c), t) for e, c in fam.cubic.items()}


# ---------------------------------------------------------------------------
# Smoothness of the surface
# ---------------------------------------------------------------------------

_FAMILY_CACHE = {}


def cached_family(S, axis: str) -> FibrationFamily:
    key = (tuple(S.coefficients()), axis)
    if key not in _FAMILY_CACHE:
        _FAMILY_CACHE[key] = fibration_family(S, axis)
    return _FAMILY_CACHE[key]


def _gauss_newton_singular(C, start, iters=80):
    """Polish a singular point of a numeric plane cubic (mpmath values).

    Works in the affine chart of the largest coordinate of ``start``.
    Returns (point, last step size) or None when it does not converge.
    """
    k = max(range(3), key=lambda i: abs(start[i]))
    free = [i for i in range(3) if i != k]
    p = [mpmath.mpc(v) / start[k] for v in start]
    step = mpmath.inf
    for _ in range(iters):
        g = cubic_gradient(C, p)
        J = mpmath.matrix(3, 2)
        for r in range(3):
            for cidx, i in enumerate(free):
                # second partials by exact differentiation of the cubic
                J[r, cidx] = _second_partial(C, p, r, i)
        rhs = mpmath.matrix([-gi for gi in g])
        JH = J.H
        try:
            delta = mpmath.lu_solve(JH * J, JH * rhs)
        except ZeroDivisionError:
            return None
        for cidx, i in enumerate(free):
            p[i] += delta[cidx]
        step = max(abs(delta[0]), abs(delta[1]))
        if step < mpmath.mpf(10) ** (-mpmath.mp.dps + 8):
            break
    res = max(abs(v) for v in cubic_gradient(C, p))
    if res > mpmath.mpf(10) ** (-mpmath.mp.dps // 2):
        return None
    return p, step


def _second_partial(C, p, a, b):
    total = 0
    for e, c in C.items():
        e2 = list(e)
        coef = e2[a]
        e2[a] -= 1
        if coef == 0 or e2[b] == 0:
            continue
        coef *= e2[b]
        e2[b] -= 1
        total += c * coef * _pw(p[0], e2[0]) * _pw(p[1], e2[1]) * _pw(p[2], e2[2])
    return total


def _node_start(C, O):
    """Image of the Weierstrass singular point, as a starting guess."""
    E = nagell_transform(C, O)
    A, B = E.short_form()
    xs = -3 * B / (2 * A) if abs(A) > abs(B) * mpmath.mpf(10) ** -30 else A * 0
    P = E.from_short(EllipticPoint(xs, xs * 0))
    return E.transform.to_cubic(P)


def singular_points_of_fiber(family: FibrationFamily, t0, chart=0, dps=40):
    """Numerically located singular points of the residual cubic at t0."""
    with mpmath.workdps(dps):
        tv = t0.approx(dps).value if hasattr(t0, "approx") else mpmath.mpc(t0)
        cf = family.cubics[chart]
        C = {e: _horner([mpmath.mpf(c.numerator) / c.denominator for c in co], tv)
             for e, co in cf.cubic.items()}
        O = tuple(_horner([mpmath.mpf(c) for c in co], tv) for co in cf.spec["zero"])
        starts = []
        try:
            starts.append(_node_start(C, O))
        except Exception:  # transform degenerate at this fiber; fall back to a grid of starts
            pass
        rng = [mpmath.mpf(v) / 3 for v in range(-3, 4)]
        starts += [(mpmath.mpc(a, 0.1), mpmath.mpc(b, -0.2), 1) for a in rng for b in rng]
        found = []
        for s in starts:
            out = _gauss_newton_singular(C, s)
            if out is None:
                continue
            p, step = out
            if not any(max(abs(p[i] - q[i]) for i in range(3)) < mpmath.mpf(10) ** -(dps // 3)
                       for q, _ in found):
                found.append((p, step))
            if found:
                # an I1 fiber has a single node
                break
        return [(cf.embed(tv, p), step) for p, step in found], cf


def smoothness_certificate(S) -> dict:
    """Exact and numeric evidence that the quartic S is smooth.

    Exact: S is smooth along L1 and L2 (resultants of the transverse
    partials), and each pencil has a squarefree discriminant of total degree
    24.  A singular point of S off L1 would lie on a singular fiber of the
    L1 pencil and would force a reducible fiber there, i.e. a multiple root of
    the discriminant.  Numeric: at each singular fiber of the L1 pencil the
    node of the residual cubic is located and grad F is shown to be nonzero
    there with interval arithmetic.  Both must pass.
    """
    from .surface import L1, L2, axis_smoothness

    cert = dict(smooth=False, reason="", exact={}, numeric={})
    if not (axis_smoothness(S, L1) and axis_smoothness(S, L2)):
        cert["reason"] = "singular-on-axis"
        return cert
    for axis in ("L1", "L2"):
        fam = cached_family(S, axis)
        loc = singular_fibers(fam)
        total = sum(loc.multiplicities) + loc.order_at_infinity
        simple = all(m == 1 for m in loc.multiplicities) and loc.order_at_infinity <= 1
        cert["exact"][axis] = dict(count=loc.count, degree=total, simple=simple)
        if not simple or total != 24:
            cert["reason"] = "non-reduced-discriminant"
            return cert
    fam = cached_family(S, "L1")
    loc = singular_fibers(fam)
    targets = [(r, 0) for r in loc.roots]
    if loc.at_infinity:
        targets.append((Fraction(0), "inf"))
    grads = S.gradient()
    checked = 0
    dps = 40
    with mpmath.workdps(dps):
        for t0, chart in targets:
            pts, _ = singular_points_of_fiber(fam, t0, chart, dps)
            if not pts:
                cert["reason"] = "node-not-located"
                return cert
            for p, step in pts:
                eps = step * 1000 + mpmath.mpf(10) ** (-dps + 10)
                scale = max(abs(v) for v in p)
                pa = [ComplexApprox(v / scale, eps) for v in p]
                ok = False
                for g in grads:
                    val = ComplexApprox(0)
                    for e, c in g.terms.items():
                        term = ComplexApprox.coerce(c)
                        for v, k in zip(pa, e):
                            if k:
                                term = term * v ** k
                        val = val + term
                    if val.is_certainly_nonzero():
                        ok = True
                        break
                if not ok:
                    cert["reason"] = "singular-point"
                    return cert
                checked += 1
    cert["numeric"] = dict(nodes_checked=checked, fibers=len(targets))
    cert["smooth"] = True
    cert["reason"] = "ok"
    return cert
