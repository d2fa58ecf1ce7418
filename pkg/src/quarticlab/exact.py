"""Exact and certified-numeric kernel.

Rationals are :class:`fractions.Fraction`.  Multivariate polynomials over the
rationals live in :class:`MultiPoly`, a sparse exponent -> coefficient map.
Univariate factorization and gcds are delegated to sympy; resultants and
certified complex root isolation are implemented here.

Resultant sign convention: ``resultant(f, g)`` is the determinant of the
Sylvester matrix whose first ``deg g`` rows carry the coefficients of ``f``
(leading coefficient first).  Hence ``resultant(x - a, x - b) == a - b``,
which agrees with ``lc(f)**deg(g) * prod(g(alpha) for alpha root of f)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
import sympy

from .errors import InvalidArgument, PrecisionExhausted

Rational = Fraction

DEFAULT_DPS = 40
MAX_DPS = 1200


def to_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, sympy.Rational):
        return Fraction(int(c.p), int(c.q))
    if hasattr(c, "numerator") and hasattr(c, "denominator"):
        # gmpy2 / sympy ground types
        return Fraction(int(c.numerator), int(c.denominator))
    raise TypeError(f"cannot convert {c!r} to an exact rational")


# ---------------------------------------------------------------------------
# Multivariate polynomials
# ---------------------------------------------------------------------------


class MultiPoly:
    """Sparse polynomial over Q in ``nvars`` variables.

    ``terms`` maps exponent tuples to nonzero Fractions.  Instances are
    treated as immutable.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, terms=None, nvars=1):
        self.nvars = nvars
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(exp)
            if len(exp) != nvars:
                raise InvalidArgument(f"exponent {exp} has wrong arity (expected {nvars})")
            c = to_fraction(c)
            if c:
                clean[exp] = clean.get(exp, 0) + c
                if not clean[exp]:
                    del clean[exp]
        self.terms = clean
        self._hash = None

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, c, nvars=1):
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def var(cls, i, nvars):
        exp = [0] * nvars
        exp[i] = 1
        return cls({tuple(exp): 1}, nvars)

    @classmethod
    def gens(cls, nvars):
        return tuple(cls.var(i, nvars) for i in range(nvars))

    @classmethod
    def from_univariate(cls, coeffs):
        """Coefficients listed from the constant term upwards."""
        return cls({(k,): c for k, c in enumerate(coeffs)}, 1)

    @classmethod
    def from_sympy(cls, p, gens=None):
        if not isinstance(p, sympy.Poly):
            p = sympy.Poly(p, *(gens or ()), domain="QQ")
        return cls({m: to_fraction(c) for m, c in p.terms()}, len(p.gens))

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise InvalidArgument("polynomials in different numbers of variables")
            return other
        return MultiPoly.const(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly({e: -c for e, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise InvalidArgument("negative power")
        result = MultiPoly.const(1, self.nvars)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        try:
            return self == MultiPoly.const(other, self.nvars)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        if not self.terms:
            return "MultiPoly(0)"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return "MultiPoly(" + " + ".join(parts) + ")"

    # queries ------------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def total_degree(self):
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def degree(self, i=0):
        if not self.terms:
            return -1
        return max(e[i] for e in self.terms)

    def is_homogeneous(self):
        return len({sum(e) for e in self.terms}) <= 1

    def coeff(self, exp):
        return self.terms.get(tuple(exp), Fraction(0))

    def evaluate(self, point):
        """Evaluate at a point whose entries support ring arithmetic."""
        if len(point) != self.nvars:
            raise InvalidArgument("point has wrong arity")
        total = 0
        for e, c in self.terms.items():
            term = c
            for v, k in zip(point, e):
                if k:
                    term = term * v**k
            total = total + term
        return total

    __call__ = lambda self, *pt: self.evaluate(pt)

    def substitute(self, images):
        """Compose with ``images`` (one MultiPoly per variable, common arity)."""
        if len(images) != self.nvars:
            raise InvalidArgument("need one image per variable")
        target = images[0].nvars
        out = MultiPoly({}, target)
        powers = [dict() for _ in images]
        for e, c in self.terms.items():
            term = MultiPoly.const(c, target)
            for i, k in enumerate(e):
                if k:
                    if k not in powers[i]:
                        powers[i][k] = images[i] ** k
                    term = term * powers[i][k]
            out = out + term
        return out

    def diff(self, i):
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = c * e[i]
        return MultiPoly(out, self.nvars)

    def univariate_coeffs(self):
        """Constant-first coefficient list of a univariate polynomial."""
        if self.nvars != 1:
            raise InvalidArgument("not univariate")
        d = self.degree(0)
        return [self.coeff((k,)) for k in range(d + 1)]

    def to_sympy(self, gens):
        if len(gens) != self.nvars:
            raise InvalidArgument("need one sympy generator per variable")
        rep = {e: sympy.Rational(c.numerator, c.denominator) for e, c in self.terms.items()}
        if not rep:
            return sympy.Poly(0, *gens, domain="QQ")
        return sympy.Poly.from_dict(rep, *gens, domain="QQ")

    def integer_primitive(self):
        """Scale to coprime integer coefficients with positive leading term."""
        if not self.terms:
            return self
        den = 1
        for c in self.terms.values():
            den = den * c.denominator // math.gcd(den, c.denominator)
        ints = {e: int(c * den) for e, c in self.terms.items()}
        g = 0
        for v in ints.values():
            g = math.gcd(g, v)
        lead = ints[max(ints)]
        if lead < 0:
            g = -g
        return MultiPoly({e: Fraction(v // g) for e, v in ints.items()}, self.nvars)


# ---------------------------------------------------------------------------
# Resultants
# ---------------------------------------------------------------------------


def _det_exact(rows):
    """Determinant of a square matrix of Fractions by Gaussian elimination."""
    m = [list(map(Fraction, r)) for r in rows]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        p = m[col][col]
        det *= p
        for r in range(col + 1, n):
            if m[r][col]:
                f = m[r][col] / p
                row, prow = m[r], m[col]
                for k in range(col, n):
                    row[k] -= f * prow[k]
    return det


def sylvester_matrix(f_coeffs, g_coeffs):
    """Sylvester matrix from leading-first coefficient lists; f on top."""
    m, n = len(f_coeffs) - 1, len(g_coeffs) - 1
    size = m + n
    rows = []
    for i in range(n):
        rows.append([0] * i + list(f_coeffs) + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + list(g_coeffs) + [0] * (size - n - 1 - i))
    return rows


def _univariate_resultant(fc, gc):
    # fc, gc: constant-first lists with nonzero leading coefficients
    if len(fc) == 1 and len(gc) == 1:
        return Fraction(1)
    return _det_exact(sylvester_matrix(fc[::-1], gc[::-1]))


def resultant(f: MultiPoly, g: MultiPoly, var: int = 0):
    """Resultant of ``f`` and ``g`` with respect to variable ``var``.

    Univariate inputs give a Fraction.  Bivariate inputs give a univariate
    MultiPoly in the remaining variable, computed exactly by evaluation at
    integer nodes and Lagrange interpolation.
    """
    if f.is_zero() or g.is_zero():
        raise InvalidArgument("resultant of a zero polynomial")
    if f.nvars != g.nvars:
        raise InvalidArgument("arity mismatch")
    if f.nvars == 1:
        return _univariate_resultant(f.univariate_coeffs(), g.univariate_coeffs())
    if f.nvars != 2:
        raise InvalidArgument("resultant supports univariate or bivariate input")
    other = 1 - var
    df, dg = f.degree(var), g.degree(var)
    bound = df * g.degree(other) + dg * f.degree(other)

    def coeffs_at(p, deg, value):
        out = [Fraction(0)] * (deg + 1)
        for e, c in p.terms.items():
            out[e[var]] += c * Fraction(value) ** e[other]
        return out

    nodes, values = [], []
    v = 0
    while len(nodes) < bound + 1:
        fc = coeffs_at(f, df, v)
        gc = coeffs_at(g, dg, v)
        # only use nodes where the leading coefficients survive
        if fc[-1] and gc[-1]:
            nodes.append(Fraction(v))
            values.append(_univariate_resultant(fc, gc))
        v = -v if v > 0 else -v + 1
        if abs(v) > 50 * (bound + 10):
            raise InvalidArgument("leading coefficients vanish too often for interpolation")
    return MultiPoly.from_univariate(_interpolate(nodes, values))


def _interpolate(xs, ys):
    """Newton interpolation; returns constant-first coefficients."""
    n = len(xs)
    coef = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j])
    poly = [Fraction(0)] * n
    poly[0] = coef[-1]
    deg = 0
    for i in range(n - 2, -1, -1):
        # poly = poly * (x - xs[i]) + coef[i]
        new = [Fraction(0)] * n
        for k in range(deg + 1):
            new[k + 1] += poly[k]
            new[k] -= xs[i] * poly[k]
        new[0] += coef[i]
        poly = new
        deg += 1
    while len(poly) > 1 and not poly[-1]:
        poly.pop()
    return poly


def discriminant_univariate(coeffs):
    """Discriminant of a univariate polynomial (constant-first coefficients)."""
    f = MultiPoly.from_univariate(coeffs)
    n = f.degree()
    df = f.diff(0)
    lead = f.coeff((n,))
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return sign * resultant(f, df) / lead


# ---------------------------------------------------------------------------
# Complex approximations with tracked error
# ---------------------------------------------------------------------------


def _eps():
    return mpmath.mpf(2) ** (-mpmath.mp.prec + 1)


class ComplexApprox:
    """A complex value with a conservative absolute error bound."""

    __slots__ = ("value", "err")

    def __init__(self, value, err=0):
        self.value = mpmath.mpc(value)
        self.err = mpmath.mpf(err)
        if self.err < 0:
            raise InvalidArgument("negative error bound")

    @classmethod
    def coerce(cls, x):
        if isinstance(x, ComplexApprox):
            return x
        if isinstance(x, (int,)):
            v = mpmath.mpc(x)
            return cls(v, abs(v) * _eps() if abs(x) > 2**50 else 0)
        if isinstance(x, Fraction):
            v = mpmath.mpc(mpmath.mpf(x.numerator) / x.denominator)
            return cls(v, abs(v) * _eps())
        v = mpmath.mpc(x)
        return cls(v, abs(v) * _eps())

    def _round(self, v, err):
        return ComplexApprox(v, err + abs(v) * _eps())

    def __add__(self, other):
        o = ComplexApprox.coerce(other)
        return self._round(self.value + o.value, self.err + o.err)

    __radd__ = __add__

    def __neg__(self):
        return ComplexApprox(-self.value, self.err)

    def __sub__(self, other):
        o = ComplexApprox.coerce(other)
        return self._round(self.value - o.value, self.err + o.err)

    def __rsub__(self, other):
        return ComplexApprox.coerce(other) - self

    def __mul__(self, other):
        o = ComplexApprox.coerce(other)
        err = abs(self.value) * o.err + abs(o.value) * self.err + self.err * o.err
        return self._round(self.value * o.value, err)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = ComplexApprox.coerce(other)
        mag = abs(o.value)
        if mag <= o.err:
            raise PrecisionExhausted("division by an interval containing zero")
        q = self.value / o.value
        err = (self.err + abs(q) * o.err) / (mag - o.err)
        return self._round(q, err)

    def __rtruediv__(self, other):
        return ComplexApprox.coerce(other) / self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise InvalidArgument("only non-negative integer powers")
        out = ComplexApprox(1)
        for _ in range(n):
            out = out * self
        return out

    def __abs__(self):
        return abs(self.value)

    def contains_zero(self):
        return abs(self.value) <= self.err

    def is_certainly_nonzero(self):
        return abs(self.value) > self.err

    def __eq__(self, other):
        # overlapping error discs; used only for coarse comparisons
        try:
            o = ComplexApprox.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return abs(self.value - o.value) <= self.err + o.err

    __hash__ = None

    def __complex__(self):
        return complex(self.value)

    def __repr__(self):
        return f"ComplexApprox({mpmath.nstr(self.value, 15)} ± {mpmath.nstr(self.err, 3)})"

    def sqrt(self):
        r = mpmath.sqrt(self.value)
        mag = abs(r)
        if mag == 0 or self.err >= abs(self.value):
            raise PrecisionExhausted("square root of an interval containing zero")
        # |sqrt(a+e) - sqrt(a)| <= e / (|sqrt(a)| * (1 + sqrt(1 - e/|a|)))
        err = self.err / mag
        return self._round(r, err)


# ---------------------------------------------------------------------------
# Univariate helpers on integer coefficient lists
# ---------------------------------------------------------------------------


_T = sympy.Symbol("t")


def poly_to_sympy(coeffs, gen=None):
    """Constant-first Fraction coefficients -> sympy Poly over QQ."""
    gen = gen or _T
    rep = [sympy.Rational(c.numerator, c.denominator) for c in map(to_fraction, coeffs)]
    return sympy.Poly(list(reversed(rep)) or [0], gen, domain="QQ")


def sympy_to_coeffs(p):
    return [to_fraction(c) for c in reversed(p.all_coeffs())]


def primitive_integer_coeffs(coeffs):
    """Scale to coprime integers with positive leading coefficient."""
    coeffs = [to_fraction(c) for c in coeffs]
    while len(coeffs) > 1 and not coeffs[-1]:
        coeffs.pop()
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g == 0:
        return ints
    if ints[-1] < 0:
        g = -g
    return [v // g for v in ints]


def horner_with_bound(coeffs, z):
    """Evaluate a constant-first polynomial at mpc ``z``.

    Returns ``(value, rounding_bound)``; the bound covers floating error of
    the Horner scheme at the current mpmath precision.
    """
    acc = mpmath.mpc(0)
    mag = mpmath.mpf(0)
    az = abs(z)
    for c in reversed(coeffs):
        acc = acc * z + c
        mag = mag * az + abs(c)
    n = len(coeffs)
    return acc, mag * (2 * n + 4) * _eps()


def _horner_deriv(coeffs, z):
    p = mpmath.mpc(0)
    dp = mpmath.mpc(0)
    for c in reversed(coeffs):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _initial_guesses(int_coeffs):
    n = len(int_coeffs) - 1
    try:
        scale = max(abs(c) for c in int_coeffs)
        fl = np.array([float(mpmath.mpf(c) / scale) for c in reversed(int_coeffs)])
        if np.all(np.isfinite(fl)) and fl[0] != 0:
            r = np.roots(fl)
            if len(r) == n and np.all(np.isfinite(r)):
                # perturb to break exact coincidences, then polish in doubles
                r = r + np.array([1e-9 * (k + 1) + 1e-9j * (k + 2) for k in range(n)])
                r = _aberth_float(fl[::-1], r)
                return [mpmath.mpc(complex(z)) for z in r]
    except (OverflowError, ValueError, np.linalg.LinAlgError):
        pass
    # Fujiwara-type radius and offset circle
    lead = abs(int_coeffs[-1])
    rad = 2 * max(
        mpmath.root(mpmath.mpf(abs(int_coeffs[n - k])) / lead, k) for k in range(1, n + 1)
    )
    return [rad * mpmath.expj(2 * mpmath.pi * k / n + 0.4) for k in range(n)]


def _aberth_float(coeffs, zs, maxiter=200):
    """Vectorized Aberth iteration in complex doubles; constant-first coefficients."""
    c = np.asarray(coeffs, dtype=complex)[::-1]
    dc = np.polyder(c)
    zs = np.array(zs, dtype=complex)
    with np.errstate(all="ignore"):
        for _ in range(maxiter):
            p, dp = np.polyval(c, zs), np.polyval(dc, zs)
            diff = zs[:, None] - zs[None, :]
            np.fill_diagonal(diff, 1)
            inv = 1 / diff
            np.fill_diagonal(inv, 0)
            ratio = p / dp
            w = ratio / (1 - ratio * inv.sum(axis=1))
            if not np.all(np.isfinite(w)):
                break
            zs = zs - w
            if np.max(np.abs(w) / np.maximum(np.abs(zs), 1)) < 1e-14:
                break
    return zs


def _aberth(coeffs, zs, maxiter, tol):
    n = len(zs)
    zs = list(zs)
    prev = None
    floor = mpmath.sqrt(tol)
    for _ in range(maxiter):
        worst = mpmath.mpf(0)
        for i in range(n):
            p, dp = _horner_deriv(coeffs, zs[i])
            if p == 0:
                continue
            s = mpmath.mpc(0)
            zi = zs[i]
            for j in range(n):
                if j != i:
                    d = zi - zs[j]
                    if d != 0:
                        s += 1 / d
            if dp == 0:
                w = mpmath.mpc(tol, tol)
            else:
                ratio = p / dp
                w = ratio / (1 - ratio * s)
            zs[i] = zi - w
            rel = abs(w) / max(abs(zs[i]), mpmath.mpf(1))
            worst = max(worst, rel)
        if worst < tol:
            break
        # stagnation at the rounding level: stop once steps no longer shrink
        if prev is not None and worst < floor and worst > prev / 4:
            break
        prev = worst
    return zs


def _smith_radii(coeffs, zs):
    """Inclusion radii n*|W_i| (Smith's theorem) with rounding slack."""
    n = len(zs)
    lead = coeffs[-1]
    radii = []
    for i, zi in enumerate(zs):
        val, bound = horner_with_bound(coeffs, zi)
        prod = mpmath.mpc(lead)
        for j, zj in enumerate(zs):
            if j != i:
                prod *= zi - zj
        if prod == 0:
            return None
        radii.append(n * (abs(val) + bound) / abs(prod) * (1 + 64 * _eps()))
    return radii


def _disjoint(zs, radii):
    for i in range(len(zs)):
        for j in range(i + 1, len(zs)):
            if abs(zs[i] - zs[j]) <= radii[i] + radii[j]:
                return False
    return True


def isolate_squarefree(int_coeffs, precision, dps=None, max_dps=MAX_DPS):
    """Certified isolating discs for all roots of a squarefree polynomial.

    Returns a list of ``(center, radius)`` with pairwise disjoint discs, each
    containing exactly one root, radius <= ``precision``.  Working precision
    doubles on failure until ``max_dps``.
    """
    if precision <= 0:
        raise InvalidArgument("precision must be positive")
    n = len(int_coeffs) - 1
    if n < 1:
        return []
    if n == 1:
        r = -Fraction(int_coeffs[0], int_coeffs[1])
        with mpmath.workdps(max(dps or DEFAULT_DPS, 20)):
            c = mpmath.mpc(mpmath.mpf(r.numerator) / r.denominator)
            return [(c, abs(c) * 4 * _eps())]
    need = int(-math.log10(precision)) + 10 if precision < 1 else 15
    dps = max(dps or DEFAULT_DPS, need)
    zs = None
    while dps <= max_dps:
        with mpmath.workdps(dps):
            coeffs = [mpmath.mpf(c) for c in int_coeffs]
            start = zs if zs is not None else _initial_guesses(int_coeffs)
            zs = _aberth(coeffs, [mpmath.mpc(z) for z in start], maxiter=60 + 4 * n,
                         tol=mpmath.mpf(10) ** (-dps + 5))
            radii = _smith_radii(coeffs, zs)
            if radii is not None and _disjoint(zs, radii) and max(radii) <= precision:
                return [(+z, +r) for z, r in zip(zs, radii)]
        dps *= 2
    raise PrecisionExhausted(f"root isolation failed below {max_dps} digits (degree {n})")


@dataclass(frozen=True, eq=False)
class AlgebraicNumber:
    """A root of an irreducible integer polynomial, designated by a disc.

    ``minpoly`` holds coprime integer coefficients, constant term first, with
    positive leading coefficient.  ``index`` is the position of the root in
    the lexicographic (real, imaginary) order of centers at creation; it is
    never changed by refinement.
    """

    minpoly: tuple
    center: mpmath.mpc
    radius: mpmath.mpf
    index: int
    multiplicity: int = 1

    @property
    def degree(self):
        return len(self.minpoly) - 1

    def __eq__(self, other):
        return (isinstance(other, AlgebraicNumber)
                and self.minpoly == other.minpoly and self.index == other.index)

    def __hash__(self):
        return hash((self.minpoly, self.index))

    def __complex__(self):
        return complex(self.center)

    def __repr__(self):
        return (f"AlgebraicNumber(deg={self.degree}, #{self.index}, "
                f"~{mpmath.nstr(self.center, 12)} ± {mpmath.nstr(self.radius, 2)})")

    def is_rational(self):
        return self.degree == 1

    def as_fraction(self):
        if not self.is_rational():
            raise InvalidArgument("not a rational number")
        return Fraction(-self.minpoly[0], self.minpoly[1])

    def is_real(self):
        # a real polynomial's non-real roots come in conjugate pairs; a disc
        # symmetric-overlapping the axis with a unique root must hold a real one
        return abs(self.center.imag) <= self.radius

    def refine(self, radius):
        """Return the same root with an isolating disc of radius <= ``radius``."""
        if radius >= self.radius:
            return self
        coeffs_int = self.minpoly
        n = self.degree
        dps = max(DEFAULT_DPS, int(-mpmath.log10(radius)) + 15)
        while dps <= MAX_DPS:
            with mpmath.workdps(dps):
                coeffs = [mpmath.mpf(c) for c in coeffs_int]
                z = mpmath.mpc(self.center)
                for _ in range(200):
                    p, dp = _horner_deriv(coeffs, z)
                    if dp == 0:
                        break
                    step = p / dp
                    z -= step
                    if abs(step) < mpmath.mpf(10) ** (-dps + 3) * max(1, abs(z)):
                        break
                p, dp = _horner_deriv(coeffs, z)
                _, bound = horner_with_bound(coeffs, z)
                if dp != 0:
                    r = n * (abs(p) + bound) / abs(dp) * (1 + 64 * _eps())
                    inside = abs(z - self.center) + r <= self.radius
                    if inside and r <= radius:
                        return AlgebraicNumber(self.minpoly, +z, +r, self.index, self.multiplicity)
            dps *= 2
        raise PrecisionExhausted("refinement failed")

    def approx(self, dps=None):
        """ComplexApprox carrying the isolating disc as its error bound."""
        target = mpmath.mpf(10) ** (-(dps or mpmath.mp.dps) + 2)
        a = self.refine(target) if self.radius > target else self
        return ComplexApprox(a.center, a.radius)

    def conjugates(self, precision=1e-30):
        return algebraic_roots(self.minpoly, precision)

    def value(self, dps=None):
        return self.approx(dps).value


def algebraic_roots(int_coeffs, precision=1e-30, multiplicity=1):
    """All roots of an irreducible integer polynomial, in designation order."""
    int_coeffs = tuple(primitive_integer_coeffs(int_coeffs))
    discs = isolate_squarefree(list(int_coeffs), precision)
    discs.sort(key=lambda d: (float(d[0].real), float(d[0].imag)))
    return [AlgebraicNumber(int_coeffs, c, r, i, multiplicity) for i, (c, r) in enumerate(discs)]


def factor_rational(coeffs):
    """Irreducible factors over Q of a constant-first coefficient list.

    Returns ``[(int_coeffs, multiplicity), ...]`` sorted deterministically.
    """
    p = poly_to_sympy(coeffs)
    _, facs = sympy.factor_list(p)
    out = []
    for f, k in facs:
        if f.degree() < 1:
            continue
        out.append((tuple(primitive_integer_coeffs(sympy_to_coeffs(f))), k))
    out.sort(key=lambda fk: (len(fk[0]), fk[0], fk[1]))
    return out


def isolate_roots(f, precision=1e-20):
    """All complex roots of ``f`` with multiplicity, as AlgebraicNumbers.

    ``f`` is a univariate MultiPoly (or constant-first coefficient list).
    The number of returned roots counted with ``multiplicity`` equals the
    degree.
    """
    if precision <= 0:
        raise InvalidArgument("precision must be positive")
    coeffs = f.univariate_coeffs() if isinstance(f, MultiPoly) else list(f)
    if not any(coeffs):
        raise InvalidArgument("zero polynomial")
    roots = []
    for fac, k in factor_rational(coeffs):
        roots.extend(algebraic_roots(fac, precision, multiplicity=k))
    return roots


def disc_value_bound(coeffs, center, radius):
    """Bound |f(z) - f(center)| over the disc via a Taylor expansion.

    Returns ``(f(center), bound)``; the image of the disc under ``f`` lies in
    the disc of that radius around ``f(center)``.
    """
    coeffs = [mpmath.mpf(to_fraction(c).numerator) / to_fraction(c).denominator
              if not isinstance(c, (mpmath.mpf, mpmath.mpc)) else c for c in coeffs]
    n = len(coeffs) - 1
    derivs = list(coeffs)
    val, bound = horner_with_bound(derivs, center)
    total = bound
    fact = 1
    for k in range(1, n + 1):
        derivs = [derivs[i] * i for i in range(1, len(derivs))]
        fact *= k
        dv, db = horner_with_bound(derivs, center)
        total += (abs(dv) + db) / fact * radius**k
    return val, total


# ---------------------------------------------------------------------------
# Polynomial utilities over Q[t] via sympy
# ---------------------------------------------------------------------------


def squarefree_part(coeffs):
    p = poly_to_sympy(coeffs)
    if p.degree() < 1:
        return [Fraction(1)]
    return sympy_to_coeffs(sympy.sqf_part(p))


def strip_common_factors(coeffs, others):
    """Divide out of ``coeffs`` every irreducible factor shared with ``others``."""
    p = poly_to_sympy(coeffs)
    for o in others:
        q = poly_to_sympy(o)
        if q.degree() < 1:
            continue
        while True:
            g = sympy.gcd(p, q)
            if g.degree() < 1:
                break
            p = sympy.quo(p, g)
    return sympy_to_coeffs(p)


# ---------------------------------------------------------------------------
# Exact arithmetic in Q(alpha)
# ---------------------------------------------------------------------------


class NumberFieldElement:
    """Element of Q(alpha) as a polynomial in alpha reduced mod the minimal polynomial.

    ``alpha`` is an AlgebraicNumber; it only fixes the embedding used by
    :meth:`approx`.  Arithmetic is exact.
    """

    __slots__ = ("alpha", "poly")

    def __init__(self, alpha, poly):
        self.alpha = alpha
        mod = poly_to_sympy(alpha.minpoly)
        if not isinstance(poly, sympy.Poly):
            poly = poly_to_sympy([to_fraction(c) for c in poly])
        self.poly = poly.rem(mod) if poly.degree() >= mod.degree() else poly

    @classmethod
    def generator(cls, alpha):
        return cls(alpha, [0, 1])

    def _lift(self, other):
        if isinstance(other, NumberFieldElement):
            if other.alpha != self.alpha:
                raise InvalidArgument("elements of different number fields")
            return other.poly
        return poly_to_sympy([to_fraction(other)])

    def __add__(self, other):
        return NumberFieldElement(self.alpha, self.poly + self._lift(other))

    __radd__ = __add__

    def __neg__(self):
        return NumberFieldElement(self.alpha, -self.poly)

    def __sub__(self, other):
        return NumberFieldElement(self.alpha, self.poly - self._lift(other))

    def __rsub__(self, other):
        return NumberFieldElement(self.alpha, self._lift(other) - self.poly)

    def __mul__(self, other):
        return NumberFieldElement(self.alpha, self.poly * self._lift(other))

    __rmul__ = __mul__

    def inverse(self):
        if self.poly.is_zero:
            raise ZeroDivisionError("inverse of zero in a number field")
        mod = poly_to_sympy(self.alpha.minpoly)
        return NumberFieldElement(self.alpha, sympy.invert(self.poly, mod))

    def __truediv__(self, other):
        if isinstance(other, NumberFieldElement):
            return self * other.inverse()
        return self * (1 / to_fraction(other))

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n):
        out = NumberFieldElement(self.alpha, [1])
        base = self
        if n < 0:
            base, n = self.inverse(), -n
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        try:
            return (self - other).is_zero()
        except (InvalidArgument, TypeError):
            return NotImplemented

    __hash__ = None

    def is_zero(self):
        return self.poly.is_zero

    def coeffs(self):
        return sympy_to_coeffs(self.poly)

    def approx(self, dps=None):
        a = self.alpha.approx(dps)
        acc = ComplexApprox(0)
        for c in reversed(self.coeffs()):
            acc = acc * a + ComplexApprox.coerce(c)
        return acc

    def __complex__(self):
        return complex(self.approx(30).value)

    def __repr__(self):
        return f"NumberFieldElement({self.poly.as_expr()} @ {self.alpha!r})"
