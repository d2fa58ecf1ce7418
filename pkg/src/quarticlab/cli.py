"""Command line front end.

    quarticlab [--config FILE] [--seed S] [--out DIR] COMMAND [options]

Each command writes JSON (and CSV where tabular) into the output
directory plus a ``run.json`` manifest, and prints a short summary.  The
output directory defaults to $QUARTICLAB_OUT, then ./quarticlab-out.
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import json
import os
import random
import sys
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

import mpmath

from . import __version__
from .errors import (ConstructionFailed, InternalConsistencyError, InvalidArgument, PrecisionExhausted,
                     QuarticLabError)
from .exact import ComplexApprox
from .schemas import SCHEMAS

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CONSTRUCTION = 3
EXIT_PRECISION = 4
EXIT_INCONSISTENT = 5
EXIT_ERROR = 6

ENV_OUT = "QUARTICLAB_OUT"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

# field -> config section
_SECTIONS = {
    "seed": "surface", "bound": "surface", "surface_file": "surface",
    "m_max": "caps", "n_max": "caps", "N": "caps", "qmax": "caps",
    "tol": "tolerances", "dps": "tolerances", "precision_cap": "tolerances", "margin": "tolerances",
    "delta": "tolerances", "threshold": "tolerances",
    "workers": "run", "out": "run",
}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1
    bound: int = 3
    surface_file: str = ""
    m_max: int = 6
    n_max: int = 6
    N: int = 3
    qmax: int = 6
    tol: float = 1e-10
    dps: int = 40
    precision_cap: int = 400
    margin: float = 0.05
    delta: float = 0.25
    threshold: float = 0.75
    workers: int = 1
    out: str = ""

    def validate(self):
        for name in ("bound", "m_max", "n_max", "N", "qmax", "dps", "precision_cap", "workers"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be >= 1")
        for name in ("tol", "margin", "delta", "threshold"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be > 0")
        if self.threshold > 1:
            raise InvalidArgument("threshold must be <= 1")
        if self.dps > self.precision_cap:
            raise InvalidArgument("dps exceeds precision_cap")
        return self

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for f in fields(self):
            sec = _SECTIONS[f.name]
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, f.name, repr(getattr(self, f.name)) if f.type == "float" else str(getattr(self, f.name)))
        lines = []
        for sec in ("surface", "caps", "tolerances", "run"):
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in cp.items(sec)]
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise InvalidArgument(f"bad config: {exc}") from exc
        types = {f.name: f.type for f in fields(cls)}
        vals = {}
        for sec in cp.sections():
            for k, v in cp.items(sec):
                if k not in types:
                    raise InvalidArgument(f"unknown config key {sec}.{k}")
                if _SECTIONS[k] != sec:
                    raise InvalidArgument(f"config key {k} belongs in [{_SECTIONS[k]}]")
                vals[k] = _parse(types[k], v, k)
        return replace(base or cls(), **vals).validate()


def _parse(typ, v, name):
    try:
        if typ == "int":
            return int(v)
        if typ == "float":
            return float(v)
        return v
    except ValueError as exc:
        raise InvalidArgument(f"bad value for {name}: {v!r}") from exc


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _surface(cfg: RunConfig):
    from .surface import QuarticSurface, build_three_line_quartic

    if cfg.surface_file:
        return QuarticSurface.from_text(Path(cfg.surface_file).read_text())
    return build_three_line_quartic(cfg.seed, cfg.bound)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _cstr(z, digits=15):
    z = complex(z)
    return f"{z.real:.{digits}g}{z.imag:+.{digits}g}j"


def _parse_point(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise InvalidArgument("a point needs four comma-separated rational coordinates")
    try:
        return [Fraction(p) for p in parts]
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"bad coordinate in {text!r}") from exc


class Outputs:
    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.names = []

    def write(self, name, text):
        (self.dir / name).write_text(text)
        self.names.append(name)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_build_surface(cfg, args, out):
    from .dynamics import surface_id
    from .surface import linear_system_dimension

    S = _surface(cfg)
    out.write("surface.txt", S.to_text())
    doc = dict(schema="quarticlab.surface/1", id=surface_id(S), seed=S.seed, bound=S.bound,
               coefficients=[str(c) for c in S.coefficients()], lines=[ln.name for ln in S.lines],
               linear_system_dimension=linear_system_dimension(),
               smooth=bool(S.certificate.get("smooth", False)), attempt=S.certificate.get("attempt"))
    out.write("surface.json", _dump(doc))
    print(f"surface {doc['id']}  seed={S.seed} bound={S.bound}  smooth={doc['smooth']}")
    return EXIT_OK


def cmd_fibration_info(cfg, args, out):
    from .dynamics import surface_id
    from .weierstrass import cached_family, singular_fibers

    S = _surface(cfg)
    fibs = []
    for which, axis in ((1, "L1"), (2, "L2")):
        fam = cached_family(S, axis)
        ch = fam.chart0
        loc = singular_fibers(fam, 1e-20)
        fibs.append(dict(index=which, axis=axis, A=[str(c) for c in ch.A], B=[str(c) for c in ch.B],
                         X=[str(c) for c in ch.X], Y=[str(c) for c in ch.Y],
                         discriminant_degree=len(ch.discriminant) - 1, singular_count=loc.count,
                         singular_at_infinity=loc.at_infinity,
                         singular_values=[_cstr(r.center) for r in loc.roots],
                         multiplicities=list(loc.multiplicities)))
        print(f"f{which} (axis {axis}): deg A={len(ch.A) - 1} deg B={len(ch.B) - 1} "
              f"#Sing={loc.count}{' (incl. infinity)' if loc.at_infinity else ''}")
    out.write("fibration-info.json", _dump(dict(schema="quarticlab.fibration-info/1", surface=surface_id(S),
                                                  fibrations=fibs)))
    return EXIT_OK


def cmd_torsion_values(cfg, args, out):
    from .dynamics import AXIS, surface_id
    from .exact import algebraic_roots, factor_rational
    from .heights import torsion_height_survey
    from .weierstrass import cached_family, torsion_value_data

    S = _surface(cfg)
    m = args.m or cfg.m_max
    fam = cached_family(S, AXIS[args.fibration])
    orders = []
    for d in torsion_value_data(fam, m):
        facs = [list(f) for f, _ in factor_rational(list(d.primitive))] if len(d.primitive) > 1 else []
        roots = [_cstr(r.center) for f in facs for r in algebraic_roots(f, 1e-30)]
        if d.infinity_primitive:
            roots.append("inf")
        orders.append(dict(m=d.m, degree=len(d.poly) - 1, primitive_degree=len(d.primitive) - 1,
                           at_infinity=d.infinity_primitive, factors=facs, roots=roots))
        print(f"m={d.m}: deg T_m={len(d.poly) - 1}  primitive values={len(roots)}")
    survey = torsion_height_survey(fam, m)
    out.write("torsion-values.json", _dump(dict(schema="quarticlab.torsion-values/1", surface=surface_id(S),
                                                  fibration=args.fibration, m=m, orders=orders,
                                                  survey=json.loads(survey.to_json()))))
    out.write("torsion-values.csv", survey.to_csv())
    if survey.running_max:
        print(f"max height of torsion values of order <= {m}: {max(survey.running_max.values()):.6f}")
    return EXIT_OK


def cmd_betti_scan(cfg, args, out):
    from .betti import base_betti_scan, match_torsion_values
    from .dynamics import AXIS, surface_id, torsion_value_list
    from .weierstrass import cached_family

    S = _surface(cfg)
    qmax = args.qmax or cfg.qmax
    fam = cached_family(S, AXIS[args.fibration])
    rep = base_betti_scan(fam, qmax=qmax, R=args.R, cells=args.cells, margin=cfg.margin)
    roots = {}
    for tv in torsion_value_list(S, args.fibration, qmax):
        roots.setdefault(tv.order, []).append(tv.value)
    matched, extra, missed = match_torsion_values(rep, roots)
    scan = json.loads(rep.to_json())
    doc = dict(schema="quarticlab.betti-scan/1", surface=surface_id(S), fibration=args.fibration, qmax=qmax,
               cells=scan["cells"], samples=scan["samples"], hits=scan["hits"],
               by_denominator=scan["by_denominator"], matched=len(matched), unmatched_hits=len(extra),
               missed_roots=len(missed), excluded=len(rep.excluded))
    out.write("betti-scan.json", _dump(doc))
    out.write("betti-scan.csv", rep.to_csv())
    print(f"hits={len(rep.hits)} matched={len(matched)} unmatched={len(extra)} missed={len(missed)}")
    return EXIT_OK if not extra and not missed else EXIT_CHECK_FAILED


def cmd_orbit(cfg, args, out):
    from .dynamics import OrbitGuards, SurfacePoint, orbit_grid, surface_id

    S = _surface(cfg)
    coords = _parse_point(args.point)
    guards = OrbitGuards(height_cap=args.height_cap, precision_floor=args.precision_floor,
                         bad_margin=args.bad_margin)
    with mpmath.workdps(cfg.dps):
        if args.exact:
            p = SurfacePoint.make(S, coords)
        else:
            SurfacePoint.make(S, coords)  # exact membership check first
            p = SurfacePoint.make(S, [ComplexApprox(mpmath.mpf(c.numerator) / c.denominator) for c in coords],
                                  check=False)
        rec = orbit_grid(p, args.r1max, args.r2max, guards)
    out.write("orbit.csv", rec.to_csv())
    doc = dict(schema="quarticlab.orbit/1", surface=surface_id(S), point=[str(c) for c in coords],
               r1max=args.r1max, r2max=args.r2max, mode="exact" if args.exact else "numeric",
               status=rec.status, entries=len(rec.grid), distinct=len(rec.distinct()), notes=rec.notes)
    out.write("orbit.json", _dump(doc))
    print(f"status={rec.status} entries={len(rec.grid)} distinct={doc['distinct']}")
    return EXIT_OK


def cmd_finite_orbit_search(cfg, args, out):
    from .dynamics import finite_orbit_search

    S = _surface(cfg)
    N = args.N or cfg.N
    rep = finite_orbit_search(S, N, args.n_max or N, dps=cfg.dps,
                              workers=cfg.workers)
    out.write("catalog.json", rep.to_json() + "\n")
    print(f"N={N}: candidates={rep.candidates} certified={len(rep.catalog)} "
          f"inconclusive={len(rep.inconclusive)} max(O)={rep.max_order}")
    return EXIT_OK


def cmd_bounds(cfg, args, out):
    from .heights import isogeny_height_delta, remond_constant, remond_kappa, torsion_order_bound

    rows = []
    tb = torsion_order_bound(args.g, args.d, args.h, args.c, args.C)
    rows.append(tb)
    rows.extend(remond_kappa(args.g, args.d, args.h))
    doc = dict(schema="quarticlab.bounds/1", g=args.g, d=args.d, h=args.h, c=args.c, C=args.C,
               remond_constant=str(remond_constant(args.g)),
               isogeny_delta={str(k): isogeny_height_delta(k) for k in (2, 3, 4, 6, 12)},
               rows=[dict(name=r.name, exponent=str(r.exponent), log10=round(r.log10, 6)) for r in rows])
    out.write("bounds.json", _dump(doc))
    lines = ["name,g,d,h,exponent,log10"] + [f"{r.name},{r.g},{r.d},{r.h!r},{r.exponent},{r.log10:.6f}" for r in rows]
    out.write("bounds.csv", "\n".join(lines) + "\n")
    for r in rows:
        print(f"{r.name:14s} log10 = {r.log10:.1f}")
    print(f"C_Rem({args.g}) = {remond_constant(args.g)}")
    return EXIT_OK


def cmd_conjugate_control(cfg, args, out):
    from .dynamics import bad_locus, calibrate_delta, surface_id, torsion_value_list

    S = _surface(cfg)
    m = args.m or cfg.m_max
    bad = bad_locus(S, args.fibration)
    seen, values = set(), []
    for tv in torsion_value_list(S, args.fibration, m):
        if tv.value is None or tv.value.degree < args.min_degree or tv.minpoly in seen:
            continue
        seen.add(tv.minpoly)
        res = calibrate_delta(tv.value, bad, cfg.threshold, cfg.delta)
        ok = res.delta > 0 and res.fraction >= cfg.threshold
        values.append(dict(order=tv.order, degree=tv.value.degree, minpoly=list(tv.minpoly),
                           delta=res.delta, fraction=res.fraction, passed=ok))
        print(f"order {tv.order} degree {tv.value.degree}: delta={res.delta:.6g} fraction={res.fraction:.3f}")
    doc = dict(schema="quarticlab.conjugate-control/1", surface=surface_id(S), fibration=args.fibration, m=m,
               threshold=cfg.threshold, delta0=cfg.delta, values=values, passed=sum(v["passed"] for v in values))
    out.write("conjugate-control.json", _dump(doc))
    return EXIT_OK if all(v["passed"] for v in values) else EXIT_CHECK_FAILED


def cmd_bezout_check(cfg, args, out):
    from .dynamics import bezout_fiber_check, surface_id

    S = _surface(cfg)
    if args.s:
        values = [Fraction(v) for v in args.s]
    else:
        rng = random.Random(f"bezout:{cfg.seed}")
        values = []
        while len(values) < args.count:
            v = Fraction(rng.randint(-20, 20), rng.randint(1, 9))
            if v not in values:
                values.append(v)
    rows, n, bound = [], 0, 0
    for s in values:
        r = bezout_fiber_check(S, s)
        n, bound = r.n_sing, r.bound
        rows.append(dict(s=str(s), count=r.count, plane_count=r.plane_count, ok=r.ok, degenerate=r.degenerate,
                         factors=[[int(a), int(b)] for a, b in r.multiplicities]))
        print(f"s={s}: count={r.count} <= {r.bound}: {r.ok}")
    doc = dict(schema="quarticlab.bezout-check/1", surface=surface_id(S), singular_count=n, bound=bound,
               fibers=rows, violations=sum(1 for r in rows if not r["ok"] and not r["degenerate"]))
    out.write("bezout-check.json", _dump(doc))
    return EXIT_OK if doc["violations"] == 0 else EXIT_CHECK_FAILED


def cmd_schema(cfg, args, out):
    if args.name not in SCHEMAS:
        raise InvalidArgument(f"unknown schema {args.name!r}; known: {', '.join(sorted(SCHEMAS))}")
    print(json.dumps(SCHEMAS[args.name], indent=1, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "build-surface": cmd_build_surface,
    "fibration-info": cmd_fibration_info,
    "torsion-values": cmd_torsion_values,
    "betti-scan": cmd_betti_scan,
    "orbit": cmd_orbit,
    "finite-orbit-search": cmd_finite_orbit_search,
    "bounds": cmd_bounds,
    "conjugate-control": cmd_conjugate_control,
    "bezout-check": cmd_bezout_check,
    "schema": cmd_schema,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="quarticlab", description=__doc__.split("\n\n")[0], allow_abbrev=False)
    ap.add_argument("--config", help="config file (sections [surface] [caps] [tolerances] [run])")
    ap.add_argument("--seed", type=int, help="surface seed (overrides config)")
    ap.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./quarticlab-out)")
    ap.add_argument("--surface", help="read the surface from a file written by build-surface")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--dps", type=int)
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("build-surface")
    sub.add_parser("fibration-info")

    p = sub.add_parser("torsion-values")
    p.add_argument("--m", type=int, help="largest order (default caps.m_max)")
    p.add_argument("--fibration", type=int, choices=(1, 2), default=1)

    p = sub.add_parser("betti-scan")
    p.add_argument("--qmax", type=int)
    p.add_argument("--fibration", type=int, choices=(1, 2), default=1)
    p.add_argument("--R", type=float, default=1.5)
    p.add_argument("--cells", type=int, default=12)

    p = sub.add_parser("orbit")
    p.add_argument("--point", required=True, help="x,y,z,w with rational entries")
    p.add_argument("--r1max", type=int, default=3)
    p.add_argument("--r2max", type=int, default=3)
    p.add_argument("--exact", action="store_true", help="exact arithmetic (coordinates grow fast)")
    p.add_argument("--height-cap", type=float, default=5000.0)
    p.add_argument("--precision-floor", type=float, default=1e-12)
    p.add_argument("--bad-margin", type=float, default=0.0)

    p = sub.add_parser("finite-orbit-search")
    p.add_argument("--N", type=int)
    p.add_argument("--n-max", type=int)

    p = sub.add_parser("bounds")
    p.add_argument("--g", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--h", type=float, default=0.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--C", type=float, default=0.0)

    p = sub.add_parser("conjugate-control")
    p.add_argument("--m", type=int)
    p.add_argument("--fibration", type=int, choices=(1, 2), default=1)
    p.add_argument("--min-degree", type=int, default=8)

    p = sub.add_parser("bezout-check")
    p.add_argument("--s", action="append", help="f2 parameter (repeatable)")
    p.add_argument("--count", type=int, default=10)

    p = sub.add_parser("schema")
    p.add_argument("name")
    return ap


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = RunConfig.from_text(Path(args.config).read_text(), cfg)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out:
        over["out"] = args.out
    if args.surface:
        over["surface_file"] = args.surface
    if args.workers is not None:
        over["workers"] = args.workers
    if args.dps is not None:
        over["dps"] = args.dps
    return replace(cfg, **over).validate()


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "schema":
            return cmd_schema(cfg, args, None)
        out = Outputs(Path(cfg.out or os.environ.get(ENV_OUT) or "quarticlab-out"))
        code = COMMANDS[args.command](cfg, args, out)
        manifest = dict(schema="quarticlab.run/1", command=args.command, config=cfg.to_text(),
                        outputs=list(out.names), version=__version__,
                        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat())
        out.write("run.json", _dump(manifest))
        return code
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConstructionFailed as exc:
        print(f"construction failed: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except InternalConsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except QuarticLabError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
