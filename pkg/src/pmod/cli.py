"""Command-line interface: ``pmod <command> ...``.

Every command writes one JSON report (stdout or ``--out``); tables are also
available as CSV through ``--csv``.  Exit codes: 0 when the command ran
(verdicts live in the JSON), 2 for usage errors, 3 for numeric failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, bounds
from .experiments import run_suite
from .fields import (
    ScalarField,
    criterion_power,
    criterion_divergence,
    criterion_loglog_growth,
    criterion_ls,
    criterion_radial_divergence,
    field_from_string,
    fmo_estimate,
    geometric_grid,
    integrate,
    sphere_means,
)
from .geometry import SphericalRing
from .mappings import distortion_vs_bound, equicontinuity_probe, eta_family, mapping_from_string, parse_family, verify_ring_pQ
from .modsolver import CurveFamily, discrete_modulus, sample_ring_family

SCHEMA = "pmod/1"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _clean(v):
    """Make a value JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _point(text: str | None, n: int) -> np.ndarray:
    if text is None:
        return np.zeros(n)
    vals = [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    if len(vals) == 1:
        return np.full(n, vals[0])
    if len(vals) != n:
        raise UsageError(f"point {text!r} has {len(vals)} coordinates, expected {n}")
    return np.array(vals)


def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _field(args) -> ScalarField:
    try:
        return field_from_string(args.field)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    if path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


# ---------------------------------------------------------------- commands

def cmd_modulus(args) -> dict:
    _need(args, "p")
    if args.what == "ring":
        n = args.n
        if args.r1 >= args.r2:
            raise UsageError("--r1 must be smaller than --r2")
        ring = SphericalRing(tuple([0.0] * n), args.r1, args.r2)
        fam = sample_ring_family(ring, args.curves, mode=args.mode, seed=args.seed)
        res = discrete_modulus(fam, args.p, resolution=args.resolution)
        oracle = bounds.ring_modulus_oracle(args.r1, args.r2, n, args.p)
        if args.rho_out:
            res.rho_star.save(args.rho_out)
        return {"family": fam.label, "curves": len(fam), "oracle": oracle, "value": res.value,
                "relative_error": abs(res.value - oracle) / oracle,
                "certificate": res.certificate.to_dict()}
    _need(args, "input")
    try:
        fam = CurveFamily.load(args.input)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read curve family: {exc}") from None
    res = discrete_modulus(fam, args.p, resolution=args.resolution)
    if args.rho_out and res.rho_star is not None:
        res.rho_star.save(args.rho_out)
    return {"family": fam.label, "curves": len(fam), "value": res.value,
            "certificate": res.certificate.to_dict()}


def cmd_criteria(args) -> dict:
    _need(args, "field")
    Q = _field(args)
    n = args.n
    x0 = _point(args.x0, n)
    kind = args.kind
    if kind in ("ls", "th4", "cor"):
        _need(args, "p")
    if kind == "fmo":
        rep = fmo_estimate(Q, x0, geometric_grid(args.eps0, args.steps), n)
    elif kind == "loglog":
        rep = criterion_loglog_growth(Q, x0, n, geometric_grid(args.eps0, args.steps))
    elif kind == "divergence":
        rep = criterion_divergence(Q, x0, n, args.eps0, args.steps)
    elif kind == "ls":
        _need(args, "s")
        rep = criterion_ls(Q, args.s, n, args.p, center=x0, radius=args.radius, steps=args.steps)
    elif kind == "th4":
        rep = criterion_radial_divergence(Q, x0, n, args.p, args.eps0, args.steps)
    else:
        rep = criterion_power(Q, x0, n, args.p, args.eps0, args.steps)
    if args.csv:
        _write_csv(args.csv, ["scale", "value"], rep.evidence)
    out = rep.to_dict()
    out["field"] = args.field
    return out


def cmd_verify(args) -> dict:
    _need(args, "map", "p", "field")
    spec = mapping_from_string(args.map, args.n)
    n = spec.n
    ring = SphericalRing(tuple(_point(args.x0, n).tolist()), args.r1, args.r2)
    Q = _field(args)
    eta = eta_family(args.eta, ring, args.p, Q)
    rep = verify_ring_pQ(spec, ring, args.p, Q, eta, k_curves=args.curves, resolution=args.resolution,
                         mode=args.mode, seed=args.seed)
    out = rep.to_dict()
    out.update({"map": spec.name, "field": args.field, "ring": {"x0": list(ring.center), "r1": ring.r1, "r2": ring.r2}})
    return out


def cmd_probe(args) -> dict:
    _need(args, "family")
    try:
        family = parse_family(args.family, args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    n = family[0].n
    tab = equicontinuity_probe(family, _point(args.b, n), _floats(args.deltas), metric=args.metric,
                               samples=args.samples)
    rows = list(tab.rows())
    if args.csv:
        _write_csv(args.csv, ["map_id", "delta", "oscillation"], rows)
    return {"family": args.family, "metric": tab.metric, "verdict": tab.verdict, "growth": tab.growth,
            "decay_slope": tab.decay_slope,
            "table": [{"map_id": m, "delta": d, "oscillation": o} for m, d, o in rows]}


def _sweep_values(text: str) -> tuple[str, list[float]]:
    if "=" not in text:
        raise UsageError(f"malformed sweep {text!r}; expected name=values")
    name, spec = text.split("=", 1)
    if spec.startswith(("logspace:", "linspace:")):
        kind, a, b, k = spec.split(":")
        fn = np.logspace if kind == "logspace" else np.linspace
        return name, fn(float(a), float(b), int(k)).tolist()
    return name, _floats(spec)


def _coerce(name: str, v: float):
    return int(v) if name == "n" else v


def cmd_bounds(args) -> dict:
    _need(args, "fn")
    if args.fn not in bounds.BOUND_FUNCTIONS:
        raise UsageError(f"unknown bound {args.fn!r}; known: {', '.join(sorted(bounds.BOUND_FUNCTIONS))}")
    fn = bounds.BOUND_FUNCTIONS[args.fn]
    fixed = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"malformed --set {item!r}")
        k, v = item.split("=", 1)
        fixed[k] = _coerce(k, float(v))
    name, values = _sweep_values(args.sweep) if args.sweep else ("_", [0.0])
    Q = _field(args) if args.field else None
    rows = []
    for v in values:
        kw = dict(fixed)
        if name != "_":
            kw[name] = _coerce(name, v)
        if args.fn == "distortion_bound_divergent" and "F" not in kw:
            if Q is None:
                raise UsageError("distortion_bound_divergent needs F or --field")
            kw["F"] = _divergent_F(Q, kw, args)
        try:
            rows.append((v, fn(**kw)))
        except TypeError as exc:
            raise UsageError(str(exc)) from None
    if args.csv:
        _write_csv(args.csv, [name, args.fn], rows)
    return {"fn": args.fn, "fixed": fixed, "sweep": name, "rows": [[a, b] for a, b in rows]}


def _divergent_F(Q: ScalarField, kw: dict, args) -> float:
    n, d, d0 = kw.get("n"), kw.get("dist"), kw.get("delta0")
    if None in (n, d, d0):
        raise UsageError("computing F needs n, dist and delta0")
    x0 = _point(args.x0, n)
    g = lambda t: 1.0 / (t * np.power(sphere_means(Q, x0, t), 1.0 / (n - 1)))
    return integrate(g, d, d0, rtol=1e-10, geometric=8).value


def cmd_distortion(args) -> dict:
    _need(args, "map", "p", "field")
    spec = mapping_from_string(args.map, args.n)
    cmp = distortion_vs_bound(spec, _point(args.x0, spec.n), args.p, _field(args), args.bound,
                              _floats(args.dists), delta0=args.delta0)
    if args.csv:
        _write_csv(args.csv, ["dist", "distortion", "bound_shape"],
                   zip(cmp.dists, cmp.distortion, cmp.bound_shape))
    return cmp.to_dict()


def cmd_reproduce(args) -> dict:
    rows = run_suite(args.seed)
    if args.csv:
        _write_csv(args.csv, ["id", "name", "passed"], [(r["id"], r["name"], r["passed"]) for r in rows])
    return {"seed": args.seed, "passed": sum(r["passed"] for r in rows), "total": len(rows), "rows": rows}


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="also write the table as CSV ('-' for stdout)")
    p.add_argument("--no-meta", action="store_true", default=argparse.SUPPRESS,
                   help="omit timestamps and timings so reruns are byte-identical")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pmod", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="key=value file with default option values")
    ap.add_argument("--no-meta", action="store_true")
    ap.add_argument("--version", action="version", version=f"pmod {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    mod = sub.add_parser("modulus", help="discrete p-modulus of a curve family")
    mod.add_argument("what", choices=["ring", "family"])
    mod.add_argument("--n", type=int, default=2)
    mod.add_argument("--p", type=float)
    mod.add_argument("--r1", type=float, default=1.0)
    mod.add_argument("--r2", type=float, default=2.0)
    mod.add_argument("--resolution", type=int, default=128)
    mod.add_argument("--curves", type=int, default=256)
    mod.add_argument("--mode", choices=["radial", "random_joining"], default="radial")
    mod.add_argument("--seed", type=int, default=0)
    mod.add_argument("--in", dest="input")
    mod.add_argument("--rho-out", help="save the optimal density in the binary grid format")
    _common(mod)
    mod.set_defaults(func=cmd_modulus)

    cr = sub.add_parser("criteria", help="evaluate an integral criterion on a majorant field")
    cr.add_argument("kind", choices=["fmo", "loglog", "divergence", "ls", "th4", "cor"])
    cr.add_argument("--field")
    cr.add_argument("--x0")
    cr.add_argument("--n", type=int, default=2)
    cr.add_argument("--p", type=float)
    cr.add_argument("--s", type=float)
    cr.add_argument("--eps0", type=float, default=0.5)
    cr.add_argument("--radius", type=float, default=1.0)
    cr.add_argument("--steps", type=int, default=20)
    _common(cr)
    cr.set_defaults(func=cmd_criteria)

    ve = sub.add_parser("verify", help="test the ring (p, Q) inequality for one mapping")
    ve.add_argument("--map")
    ve.add_argument("--x0")
    ve.add_argument("--n", type=int, default=2)
    ve.add_argument("--r1", type=float, default=1.0)
    ve.add_argument("--r2", type=float, default=2.0)
    ve.add_argument("--p", type=float)
    ve.add_argument("--field")
    ve.add_argument("--eta", choices=["const", "loglog", "qmean"], default="const")
    ve.add_argument("--curves", type=int, default=256)
    ve.add_argument("--resolution", type=int, default=128)
    ve.add_argument("--mode", choices=["radial", "random_joining"], default="radial")
    ve.add_argument("--seed", type=int, default=0)
    _common(ve)
    ve.set_defaults(func=cmd_verify)

    pr = sub.add_parser("probe", help="oscillation table for a family of mappings")
    pr.add_argument("--family")
    pr.add_argument("--b")
    pr.add_argument("--n", type=int, default=2)
    pr.add_argument("--deltas", default="0.5,0.25,0.125,0.0625")
    pr.add_argument("--metric", choices=["euclidean", "chordal"], default="euclidean")
    pr.add_argument("--samples", type=int, default=512)
    _common(pr)
    pr.set_defaults(func=cmd_probe)

    bo = sub.add_parser("bounds", help="evaluate a bound over a parameter sweep")
    bo.add_argument("--fn")
    bo.add_argument("--set", action="append", help="fixed parameter name=value (repeatable)")
    bo.add_argument("--sweep", help="name=a,b,c or name=logspace:lo:hi:k or name=linspace:lo:hi:k")
    bo.add_argument("--field", help="field used to compute F for the divergent distortion bound")
    bo.add_argument("--x0")
    _common(bo)
    bo.set_defaults(func=cmd_bounds)

    di = sub.add_parser("distortion", help="compare a mapping's distortion with a bound shape")
    di.add_argument("--map")
    di.add_argument("--x0")
    di.add_argument("--n", type=int, default=2)
    di.add_argument("--p", type=float)
    di.add_argument("--field")
    di.add_argument("--bound", choices=["fmo", "divergent"], default="fmo")
    di.add_argument("--dists", default="1e-2,1e-3,1e-4,1e-5")
    di.add_argument("--delta0", type=float)
    _common(di)
    di.set_defaults(func=cmd_distortion)

    rp = sub.add_parser("reproduce", help="run the fixed experiment suite and write a summary")
    rp.add_argument("--seed", type=int, default=0)
    _common(rp)
    rp.set_defaults(func=cmd_reproduce)
    return ap


def read_config(path) -> dict:
    """Parse key = value lines; '#' starts a comment, dashes in keys become underscores."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = val.strip("\"'")
    return out


def _apply_config(parser: argparse.ArgumentParser, cfg: dict) -> None:
    for sp in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest: a for a in sp._actions}
        defaults = {}
        for k, v in cfg.items():
            if k in known and known[k].option_strings:
                act = known[k]
                defaults[k] = act.type(v) if act.type else v
        sp.set_defaults(**defaults)


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(_clean(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _error(kind: str, message: str, code: int) -> int:
    _emit({"schema": SCHEMA, "error": {"type": kind, "message": message}, "exit_code": code}, None)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config(parser, read_config(args.config))
            args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("pmod: a command is required")
        t0 = time.perf_counter()
        body = args.func(args)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except (KeyError, ValueError) as exc:
        return _error("usage", str(exc.args[0]) if exc.args else repr(exc), EXIT_USAGE)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error("numeric", str(exc), EXIT_NUMERIC)
    except OSError as exc:
        return _error("io", str(exc), EXIT_USAGE)
    report = {"schema": SCHEMA, "command": args.command}
    for key in ("what", "kind"):
        if hasattr(args, key):
            report[key] = getattr(args, key)
    report["result"] = body
    if not getattr(args, "no_meta", False):
        report["meta"] = {"version": __version__,
                          "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                          "elapsed_s": round(time.perf_counter() - t0, 3)}
    _emit(report, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
