"""Naive and canonical heights, and the explicit torsion-order bounds.

The naive height on a fiber is the height of the x-coordinate of an
integral short Weierstrass model, h(P) = log max(|X|, |Z|) for x(P) = X/Z
in lowest terms.  This is the height attached to the degree-2 divisor 2O,
so the canonical height computed here is the limit of 4^-n h(2^n P) for
that divisor (twice the value of the normalization based on O alone).

Canonical heights are computed without ever writing down 2^n P.  For
x(2^n P) = X_n / Z_n in lowest terms,

    X_{n+1} = phi(X_n, Z_n) / g_n,   Z_{n+1} = psi(X_n, Z_n) / g_n,

where phi, psi are the duplication forms and g_n is their gcd, which
divides R = Res(phi, psi).  The archimedean size of phi, psi is read from a
floating copy of the normalized point (X_n : Z_n), and g_n from residues of
X_n, Z_n modulo a power of R that drops by one at every step.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import InvalidArgument, PrecisionExhausted, UnsupportedDomain
from .exact import AlgebraicNumber, _univariate_resultant, to_fraction
from .weierstrass import EllipticPoint, WeierstrassFiber, is_exact


@dataclass(frozen=True)
class HeightValue:
    value: float
    err: float = 0.0

    def __float__(self):
        return float(self.value)

    def contains(self, v) -> bool:
        return abs(self.value - v) <= self.err

    def __repr__(self):
        return f"HeightValue({float(self.value):.12g} ± {float(self.err):.2g})"


# ---------------------------------------------------------------------------
# Naive heights
# ---------------------------------------------------------------------------


def _rational_point_height(coords):
    fr = [to_fraction(c) for c in coords]
    if not any(fr):
        raise InvalidArgument("the zero vector is not a projective point")
    den = 1
    for c in fr:
        den = math.lcm(den, c.denominator)
    ints = [int(c * den) for c in fr]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    return math.log(max(abs(v) // g for v in ints))


def mahler_height(alpha: AlgebraicNumber, dps: int = 40) -> HeightValue:
    """Absolute Weil height of an algebraic number, log M(minpoly) / degree."""
    d = alpha.degree
    lead = alpha.minpoly[-1]
    total = mpmath.log(abs(lead))
    err = mpmath.mpf(0)
    with mpmath.workdps(dps):
        for r in alpha.conjugates(mpmath.mpf(10) ** (-dps // 2)):
            a = abs(r.center)
            if a > 1:
                total += mpmath.log(a)
                # log is 1/a-Lipschitz beyond 1
                err += r.radius / max(a - r.radius, mpmath.mpf(1))
            elif a + r.radius > 1:
                err += mpmath.log(1 + r.radius)
    return HeightValue(float(total / d), float(err / d) + 1e-15)


def naive_height(p) -> HeightValue:
    """Absolute logarithmic Weil height of a projective point.

    ``p`` is a sequence of rationals, or a pair (1, alpha) with an
    AlgebraicNumber alpha (equivalently just ``alpha``), whose height is
    log M(alpha) / deg(alpha).
    """
    if isinstance(p, AlgebraicNumber):
        return mahler_height(p)
    coords = list(p)
    algebraic = [c for c in coords if isinstance(c, AlgebraicNumber)]
    if algebraic:
        if len(coords) == 2 and len(algebraic) == 1 and is_exact(coords[0]) and not isinstance(
                coords[0], AlgebraicNumber):
            if to_fraction(coords[0]) == 0:
                return HeightValue(0.0)
            if to_fraction(coords[0]) != 1:
                raise UnsupportedDomain("normalize the point to (1 : alpha) first")
            return mahler_height(algebraic[0])
        raise UnsupportedDomain("only (1 : alpha) points over number fields are supported")
    for c in coords:
        if not is_exact(c):
            raise UnsupportedDomain("numeric points have no well-defined height")
    return HeightValue(_rational_point_height(coords))


def x_height(P: EllipticPoint) -> float:
    """Height of the x-coordinate (the naive height used on fibers)."""
    if P.is_infinity:
        return 0.0
    return _rational_point_height([P.x, 1])


# ---------------------------------------------------------------------------
# Canonical height
# ---------------------------------------------------------------------------


def integral_short_model(E: WeierstrassFiber):
    """(A, B, u) with u^4 A_E, u^6 B_E integral for the short form of E over Q."""
    A, B = E.short_form()
    A, B = to_fraction(A), to_fraction(B)
    u = 1
    for c, w in ((A, 4), (B, 6)):
        d = c.denominator
        # smallest u with d | u^w, via prime powers of d
        for prime, e in _factor_small(d).items():
            need = -(-e // w)
            while u % prime ** need:
                u *= prime
    return int(A * u ** 4), int(B * u ** 6), u


def _factor_small(n):
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _duplication_resultant(A, B):
    phi = [1, 0, -2 * A, -8 * B, A * A]
    psi = [0, 4, 0, 4 * A, 4 * B]
    return abs(int(_univariate_resultant(phi, psi)))


def canonical_height(E: WeierstrassFiber, P: EllipticPoint, tol: float = 1e-10,
                     max_steps: int = 60, naive=None) -> HeightValue:
    """lim 4^-n h(x(2^n P)) on an integral short model of E over Q.

    ``naive`` optionally replaces the x-coordinate height by another
    function of points; it is then evaluated literally on exact multiples,
    which is only feasible for a few doublings.
    """
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    if naive is not None:
        return _literal_limit(E, P, naive, tol, scale=4)
    for v in (E.a1, E.a2, E.a3, E.a4, E.a6):
        if not is_exact(v) or not isinstance(to_fraction_safe(v), Fraction):
            raise UnsupportedDomain("canonical_height needs a fiber over Q")
    if E.is_singular():
        raise InvalidArgument("singular fiber")
    if P.is_infinity:
        return HeightValue(0.0, 0.0)
    E.check(P)
    A, B, u = integral_short_model(E)
    Ps = E.to_short(P)
    x = to_fraction(Ps.x) * u * u
    X, Z = x.numerator, x.denominator
    h0 = math.log(max(abs(X), Z))
    R = _duplication_resultant(A, B)
    logR = math.log(R) if R > 1 else 0.0
    # terms are bounded by the size of the forms on the unit square and by log R
    coef_bound = math.log(1 + 2 * abs(A) + 8 * abs(B) + A * A + 4 * (1 + abs(A) + abs(B)))
    # |a_n - log g_n| <= bound: a_n is at most coef_bound and at least -(log R + coef_bound)
    bound = 2 * (coef_bound + logR) + 1.0
    steps = max_steps
    for n in range(1, max_steps + 1):
        if bound * 4.0 ** -n / 3 < tol / 4:
            steps = n
            break
    else:
        raise PrecisionExhausted("canonical height needs more doublings than allowed")
    dps = max(30, int(steps * 0.62) + 20)
    mod = R ** (steps + 1) if R > 1 else 1
    Xr, Zr = X % mod if mod > 1 else 0, Z % mod if mod > 1 else 0
    total = mpmath.mpf(h0)
    prev = total
    with mpmath.workdps(dps):
        xa, za = mpmath.mpf(X), mpmath.mpf(Z)
        sc = max(abs(xa), abs(za))
        xa, za = xa / sc, za / sc
        Am, Bm = mpmath.mpf(A), mpmath.mpf(B)
        weight = mpmath.mpf(1)
        for n in range(steps):
            phi = xa ** 4 - 2 * Am * xa ** 2 * za ** 2 - 8 * Bm * xa * za ** 3 + Am * Am * za ** 4
            psi = 4 * za * (xa ** 3 + Am * xa * za ** 2 + Bm * za ** 3)
            big = max(abs(phi), abs(psi))
            a_n = mpmath.log(big)
            g = 1
            if mod > 1:
                phi_r = (Xr ** 4 - 2 * A * Xr ** 2 * Zr ** 2 - 8 * B * Xr * Zr ** 3 + A * A * Zr ** 4) % mod
                psi_r = (4 * Zr * (Xr ** 3 + A * Xr * Zr ** 2 + B * Zr ** 3)) % mod
                g = math.gcd(math.gcd(phi_r, psi_r), R)
                mod //= R
                Xr, Zr = (phi_r // g) % mod, (psi_r // g) % mod
            weight /= 4
            total += weight * (a_n - mpmath.log(g))
            xa, za = phi / big, psi / big
            if abs(total - prev) < tol / 2 and n >= 2 and weight * bound / 3 < tol / 4:
                break
            prev = total
        tail = weight * bound / 3
    return HeightValue(float(total), float(tail) + 1e-15)


def to_fraction_safe(v):
    try:
        return to_fraction(v)
    except TypeError:
        return None


def _literal_limit(E, P, naive, tol, scale, sign=1, n_max=6):
    """Literal 4^-n (or 2^-n) scaled limit with exact multiples; few doublings."""
    Q = P
    vals = []
    for n in range(n_max + 1):
        h = naive(Q) if sign == 1 else naive(Q) - naive(E.neg(Q))
        vals.append(h / scale ** n)
        if n >= 1 and abs(vals[-1] - vals[-2]) < tol / 2:
            break
        Q = E.add(Q, Q, check=False)
    err = abs(vals[-1] - vals[-2]) if len(vals) > 1 else 0.0
    return HeightValue(float(vals[-1]), float(err) + tol)


def symmetrized_canonical_height(E, P, tol=1e-10, naive=None):
    """(hM, hM1, hM2) with hM1 from h(P) - h(-P), hM2 from h(P) + h(-P).

    hM1 uses the 2^-n scaling and hM2 the 4^-n scaling; hM = (hM1 + hM2) / 2.
    With the default x-coordinate height h(-P) = h(P) term by term, so hM1
    vanishes identically and hM2 = 2 h^.
    """
    if naive is None:
        h = canonical_height(E, P, tol / 2)
        h1 = HeightValue(0.0, 0.0)
        h2 = HeightValue(2 * h.value, 2 * h.err)
    else:
        h1 = _literal_limit(E, P, naive, tol, scale=2, sign=-1)
        h2 = _literal_limit(E, P, lambda Q: naive(Q) + naive(E.neg(Q)), tol, scale=4)
    hm = HeightValue((h1.value + h2.value) / 2, (h1.err + h2.err) / 2)
    return hm, h1, h2


def parallelogram_residual(E, P, Q, tol=1e-10):
    """hM(P+Q) + hM(P-Q) - 2 hM(P) - hM(Q) - hM(-Q), which should vanish."""
    def hm(R):
        return symmetrized_canonical_height(E, R, tol)[0]

    terms = [hm(E.add(P, Q)), hm(E.sub(P, Q)), hm(P), hm(Q), hm(E.neg(Q))]
    val = terms[0].value + terms[1].value - 2 * terms[2].value - terms[3].value - terms[4].value
    err = terms[0].err + terms[1].err + 2 * terms[2].err + terms[3].err + terms[4].err
    return HeightValue(val, err)


# ---------------------------------------------------------------------------
# Explicit bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """An astronomically large bound base^exponent kept exactly and as log10."""

    name: str
    g: int
    d: int
    h: float
    exponent: Fraction
    base: Fraction  # rational upper approximation of the base
    value: int  # ceiling of base**exponent
    log10: float

    @property
    def digits(self):
        return self.value.bit_length() * math.log10(2)

    def log10_from_integer(self):
        return math.log10(self.value) if self.value > 0 else float("-inf")

    def as_dict(self):
        return dict(name=self.name, g=self.g, d=self.d, h=self.h, exponent=str(self.exponent),
                    log10=self.log10, log10_check=self.log10_from_integer())


def _upper_fraction(x, digits=30):
    """A Fraction >= x, within 10^-digits relative."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    with mpmath.workdps(digits + 10):
        v = mpmath.mpf(x)
        scale = 10 ** digits
        return Fraction(int(mpmath.ceil(v * scale)), scale)


def _max_term(values):
    best = None
    for v in values:
        f = _upper_fraction(v)
        if best is None or f > best:
            best = f
    return best


def _report(name, g, d, h, base, exponent):
    if exponent.denominator != 1:
        raise InvalidArgument("only integral exponents are evaluated exactly")
    e = exponent.numerator
    num, den = base.numerator ** e, base.denominator ** e
    value = -(-num // den)
    with mpmath.workdps(30):
        log10 = float(e * mpmath.log10(mpmath.mpf(base.numerator) / base.denominator))
    return BoundReport(name, g, d, float(h), exponent, base, value, log10)


def _check_inputs(g, d, h):
    if g < 1 or d < 1:
        raise InvalidArgument("g and d must be positive integers")
    if h < 0:
        raise InvalidArgument("height term must be non-negative")


def torsion_order_bound(g: int, d: int, hterm: float, c: float = 1, C: float = 0) -> BoundReport:
    """((14g)^(64g^2) d max(1, c h + C, log d)^2)^(35840 g^3 / 16)."""
    _check_inputs(g, d, hterm)
    m = _max_term([1, Fraction(c) * _upper_fraction(hterm) + Fraction(C) if hterm else Fraction(C),
                   mpmath.log(d) if d > 1 else 0])
    base = Fraction(14 * g) ** (64 * g * g) * d * m * m
    return _report("torsion-order", g, d, hterm, base, Fraction(35840 * g ** 3, 16))


def remond_kappa(g: int, d: int, hF: float):
    """(exponent bound kappa^(35/16), cardinality bound kappa^(4g+1)) and kappa itself.

    kappa = ((14g)^(64g^2) d max(1, hF, log d)^2)^(1024 g^3).
    """
    _check_inputs(g, d, hF)
    m = _max_term([1, hF, mpmath.log(d) if d > 1 else 0])
    base = Fraction(14 * g) ** (64 * g * g) * d * m * m
    k_exp = Fraction(1024 * g ** 3)
    kappa = _report("kappa", g, d, hF, base, k_exp)
    expo = _report("exponent", g, d, hF, base, k_exp * Fraction(35, 16))
    card = _report("cardinality", g, d, hF, base, k_exp * (4 * g + 1))
    return expo, card, kappa


def remond_constant(g: int) -> Fraction:
    """C_Rem(g) = 3 * 35840 g^3 / 16."""
    if g < 1:
        raise InvalidArgument("g must be positive")
    return Fraction(3 * 35840 * g ** 3, 16)


def remond_constant_prime(g: int, field_degree: int, eta: float, eta_prime: float,
                          c_height: float) -> BoundReport:
    """C'_Rem = (14g)^(64g^2) (eta' C_height + eta) [K:Q]^C_Rem; eta, eta' are inputs."""
    _check_inputs(g, field_degree, c_height)
    lin = _upper_fraction(eta_prime) * _upper_fraction(c_height) + _upper_fraction(eta)
    cr = remond_constant(g)
    base = Fraction(field_degree)
    rep = _report("C'_Rem", g, field_degree, c_height, base, cr)
    factor = Fraction(14 * g) ** (64 * g * g) * lin
    value = -(-(rep.value * factor.numerator) // factor.denominator)
    with mpmath.workdps(30):
        log10 = rep.log10 + float(mpmath.log10(mpmath.mpf(factor.numerator) / factor.denominator))
    return BoundReport("C'_Rem", g, field_degree, float(c_height), cr, base, value, log10)


def isogeny_height_delta(deg: int) -> float:
    """Upper bound 1/2 log deg for the change of Faltings height under an isogeny."""
    if deg < 1:
        raise InvalidArgument("degree must be positive")
    return 0.5 * math.log(deg)


# ---------------------------------------------------------------------------
# Survey of heights of torsion values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurveyRow:
    order: int
    minpoly: tuple
    degree: int
    height: float
    height_err: float
    count: int  # number of conjugates (= degree)


@dataclass(frozen=True)
class SurveyReport:
    rows: tuple
    running_max: dict  # order -> max height over orders <= order
    at_infinity: tuple  # orders m for which t = oo has exact order m

    def to_json(self):
        return json.dumps(dict(
            schema="quarticlab.height-survey/1",
            rows=[dict(order=r.order, minimal_polynomial=list(r.minpoly), degree=r.degree,
                       height=round(r.height, 12), height_err=r.height_err) for r in self.rows],
            running_max={str(k): round(v, 12) for k, v in self.running_max.items()},
            at_infinity=list(self.at_infinity)), indent=1, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["order", "degree", "height", "height_err", "minimal_polynomial"])
        for r in self.rows:
            w.writerow([r.order, r.degree, f"{r.height:.12f}", f"{r.height_err:.2e}",
                        " ".join(map(str, r.minpoly))])
        return buf.getvalue()


def torsion_height_survey(family, m_max: int) -> SurveyReport:
    """Heights of the torsion values of the family section of order <= m_max."""
    from .exact import factor_rational
    from .weierstrass import torsion_value_data

    rows = []
    running = {}
    best = 0.0
    data = torsion_value_data(family, m_max)
    at_inf = []
    for d in data:
        if d.infinity_primitive:
            at_inf.append(d.m)
        if len(d.primitive) > 1:
            for fac, _ in factor_rational(list(d.primitive)):
                from .exact import algebraic_roots

                alpha = algebraic_roots(fac, 1e-30)[0]
                h = mahler_height(alpha)
                rows.append(SurveyRow(d.m, tuple(fac), alpha.degree, h.value, h.err, alpha.degree))
                best = max(best, h.value)
        running[d.m] = best
    return SurveyReport(tuple(rows), running, tuple(at_inf))
