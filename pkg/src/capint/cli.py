"""Command-line surface for the toolkit.

Subcommands compute contents, integrals, maximal functions and capacities
on user-supplied sets and functions, run verification ensembles, and emit
deterministic reports with optional SVG histograms of the ratio
distributions. All randomness flows from the --seed flag; two runs with
the same config produce byte-identical reports apart from the timing
block, and a report can be re-run from its own echoed config.

File formats are JSON objects with a fixed field set: a set file is
{"n": ..., "L": ..., "cells": [...]} (index vectors), a function file is
{"n": ..., "L": ..., "values": [...]} (dense row-major). Unknown fields
are rejected. Exit status: 0 all pass, 1 any fail verdict (inconclusive
too under --strict), 2 configuration or input errors.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, verify
from .choquet import BallContentEvaluator, DyadicContentEvaluator, choquet_integral
from .content import Interval, ball_content_bounds, dyadic_content
from .errors import DomainError, FormatError
from .lattice import GridSet, StepFunction
from .maximal import ball_maximal, dyadic_maximal, riesz_maximal
from .riesz import choquet_wrt_capacity


# ---------------------------------------------------------------------------
# file formats


def _load_object(path, required, optional=()):
    """JSON object with exactly the given fields; diagnostics carry the
    file position or field name."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"{path}: {e.strerror or e}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: expected an object at top level")
    for k in obj:
        if k not in required and k not in optional:
            raise FormatError(f"{path}: unknown field {k!r}", field=k)
    for k in required:
        if k not in obj:
            raise FormatError(f"{path}: missing field {k!r}", field=k)
    return obj


def load_grid_set(path) -> GridSet:
    obj = _load_object(path, ("n", "L", "cells"))
    try:
        return GridSet.from_cells(int(obj["n"]), int(obj["L"]), obj["cells"])
    except (DomainError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: field 'cells': {e}", field="cells") from None


def load_step_function(path) -> StepFunction:
    obj = _load_object(path, ("n", "L", "values"))
    try:
        return StepFunction(int(obj["n"]), int(obj["L"]), obj["values"])
    except (DomainError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: field 'values': {e}", field="values") from None


def dump_grid_set(E: GridSet) -> str:
    cells = [list(c) for c in E.cells()]
    return json.dumps({"n": E.n, "L": E.L, "cells": cells}, indent=2) + "\n"


def dump_step_function(f: StepFunction) -> str:
    return (
        json.dumps({"n": f.n, "L": f.L, "values": list(map(float, f.values))}, indent=2)
        + "\n"
    )


# ---------------------------------------------------------------------------
# reports


def _record_json(rec: verify.InequalityCheck) -> dict:
    return {
        "spec": rec.spec_id,
        "params": _jsonable(rec.descriptor),
        "lhs": [rec.lhs.lo, rec.lhs.hi],
        "rhs": [rec.rhs.lo, rec.rhs.hi],
        "constant": rec.constant,
        "ratio": [rec.ratio.lo, rec.ratio.hi],
        "verdict": rec.verdict,
        "note": rec.note,
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (tuple, list)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def build_report(config, records, constants, seconds) -> dict:
    tallies = {}
    for r in records:
        t = tallies.setdefault(r.spec_id, dict.fromkeys(
            (verify.PASS, verify.FAIL, verify.INCONCLUSIVE), 0))
        t[r.verdict] += 1
    return {
        "version": __version__,
        "config": _jsonable(config),
        "checks": [_record_json(r) for r in records],
        "constants": {
            k: {"value": v, "kind": kind} for k, (v, kind) in sorted(constants.items())
        },
        "tallies": tallies,
        "summary": {
            "checks": len(records),
            "fails": sum(t[verify.FAIL] for t in tallies.values()),
            "inconclusive": sum(t[verify.INCONCLUSIVE] for t in tallies.values()),
        },
        "timing": {"seconds": round(seconds, 3)},
    }


def report_bytes(report: dict, with_timing: bool = True) -> bytes:
    """Stable serialization; drop the timing block to compare runs."""
    body = dict(report)
    if not with_timing:
        body.pop("timing", None)
    return (json.dumps(body, indent=2) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# histograms: small hand-rolled SVGs, deterministic for fixed input


def ratio_histogram_svg(values, title, bins=24) -> str:
    vals = [v for v in map(float, values) if v == v]
    top = max([1.05] + vals) * 1.02
    counts = [0] * bins
    for v in vals:
        idx = min(int(v / top * bins), bins - 1)
        counts[idx] += 1
    peak = max(counts + [1])
    w, h, ml, mb, mt = 480, 300, 42, 30, 28
    bw = (w - ml - 12) / bins
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{ml}" y="18" font-family="monospace" font-size="13">{title}'
        f" (n={len(vals)})</text>",
    ]
    for i, c in enumerate(counts):
        if c == 0:
            continue
        bh = (h - mb - mt) * c / peak
        x = ml + i * bw
        y = h - mb - bh
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{bw - 1:.2f}" height="{bh:.2f}" '
            f'fill="#4878a8"/>'
        )
    axis_y = h - mb
    one_x = ml + (1.0 / top) * (w - ml - 12)
    parts += [
        f'<line x1="{ml}" y1="{axis_y}" x2="{w - 12}" y2="{axis_y}" stroke="black"/>',
        f'<line x1="{one_x:.2f}" y1="{mt}" x2="{one_x:.2f}" y2="{axis_y}" '
        f'stroke="#c04040" stroke-dasharray="4 3"/>',
        f'<text x="{ml}" y="{h - 10}" font-family="monospace" font-size="11">0</text>',
        f'<text x="{one_x - 4:.2f}" y="{h - 10}" font-family="monospace" '
        f'font-size="11">1</text>',
        f'<text x="{w - 60}" y="{h - 10}" font-family="monospace" '
        f'font-size="11">{top:.3g}</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def write_plots(outdir: Path, records) -> list:
    by_spec = {}
    for r in records:
        by_spec.setdefault(r.spec_id, []).append(r.ratio.hi)
    written = []
    for sid in sorted(by_spec):
        p = outdir / f"ratio-hist-{sid}.svg"
        p.write_text(
            ratio_histogram_svg(by_spec[sid], f"{sid} ratio upper endpoints"),
            encoding="utf-8",
        )
        written.append(p)
    return written


# ---------------------------------------------------------------------------
# parameter plumbing


_PARAM_FLAGS = (
    ("beta", float),
    ("gamma", float),
    ("alpha", float),
    ("s", float),
    ("p", float),
    ("n", int),
    ("L", int),
    ("members", int),
    ("evaluator", str),
    ("law", str),
    ("tight", None),
)


def _collect_params(args) -> dict:
    out = {}
    for name, _ in _PARAM_FLAGS:
        v = getattr(args, name, None)
        if v is not None and v is not False:
            out[name] = v
    return out


def _verify_config(args) -> dict:
    cfg = {"command": "verify", "seed": args.seed, "tolerance": args.tolerance}
    if args.all:
        cfg["all"] = True
    else:
        cfg["spec"] = args.spec
        cfg["params"] = _collect_params(args)
        cfg["size"] = args.size
        if args.constant is not None:
            cfg["constant"] = args.constant
        if args.input:
            cfg["input"] = list(args.input)
        if args.threshold is not None:
            cfg["threshold"] = args.threshold
    return cfg


def _load_instance(spec_id, paths, threshold):
    kind = verify.CATALOG[spec_id].instance_kind
    fns = [load_step_function(p) for p in paths]
    if kind == "family":
        return fns
    if len(fns) != 1:
        raise FormatError(f"{spec_id} takes exactly one --input file")
    if kind == "function-threshold" and threshold is not None:
        return (fns[0], float(threshold))
    return fns[0]


def run_verify_config(cfg) -> tuple:
    """Execute an echoed verify config; returns (records, constants)."""
    tol = cfg.get("tolerance", verify.GUARD)
    if cfg.get("all"):
        out = verify.run_suite(seed=cfg["seed"], tolerance=tol)
        return out["records"], out["constants"]
    sid = cfg["spec"]
    params = dict(cfg.get("params") or {})
    if "input" in cfg:
        inst = _load_instance(sid, cfg["input"], cfg.get("threshold"))
        rec = verify.check(sid, inst, params, constant=cfg.get("constant"), tolerance=tol)
        records = [rec]
    else:
        if cfg.get("seed") is None:
            raise DomainError("ensemble runs need --seed")
        records = verify.run_ensemble(
            sid,
            params,
            seed=cfg["seed"],
            size=cfg.get("size") or 100,
            constant=cfg.get("constant"),
            tolerance=tol,
        )
    constants = {}
    if records:
        key = f"{sid}:{verify._param_tag(params)}" if params else sid
        constants[key] = (records[0].constant, verify.CATALOG[sid].constant_kind)
    return records, constants


# ---------------------------------------------------------------------------
# subcommands


def _cmd_content(args) -> int:
    E = load_grid_set(args.set)
    if args.evaluator == "dyadic":
        print(repr(dyadic_content(E, args.beta)))
    else:
        iv = ball_content_bounds(E, args.beta, tight=not args.fast)
        print(repr(iv.lo), repr(iv.hi))
    return 0


def _cmd_integrate(args) -> int:
    f = load_step_function(args.fn)
    if args.evaluator == "capacity":
        if args.alpha is None or args.s is None:
            raise DomainError("capacity integration needs --alpha and --s")
        ctx = verify.capacity_context(args.alpha, args.s, f.n, f.L)
        print(repr(choquet_wrt_capacity(f, ctx)))
        return 0
    if args.beta is None:
        raise DomainError("content integration needs --beta")
    if args.evaluator == "dyadic":
        print(repr(choquet_integral(f, DyadicContentEvaluator(args.beta))))
    else:
        iv = choquet_integral(f, BallContentEvaluator(args.beta, tight=not args.fast))
        print(repr(iv.lo), repr(iv.hi))
    return 0


def _cmd_maximal(args) -> int:
    f = load_step_function(args.fn)
    if args.operator == "capacity":
        if args.alpha is None or args.s is None:
            raise DomainError("the capacity maximal operator needs --alpha and --s")
        ctx = verify.capacity_context(args.alpha, args.s, f.n, f.L)
        m = riesz_maximal(f, args.alpha, args.s, ctx)
    elif args.operator == "dyadic":
        if args.beta is None:
            raise DomainError("content maximal operators need --beta")
        m = dyadic_maximal(f, args.beta)
    else:
        if args.beta is None:
            raise DomainError("content maximal operators need --beta")
        mode = "uncentered" if args.operator == "ball-uncentered" else "centered"
        m = ball_maximal(f, args.beta, mode=mode, tight=not args.fast)
    obj = {
        "n": m.n,
        "L": m.L,
        "operator": m.operator,
        "lo": list(map(float, m.lo())),
        "hi": list(map(float, m.hi())),
    }
    text = json.dumps(obj, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_capacity(args) -> int:
    E = load_grid_set(args.set)
    ctx = verify.capacity_context(args.alpha, args.s, E.n, E.L)
    sol = ctx.solve(E)
    print(repr(sol.objective))
    if not sol.converged:
        print("warning: solver stopped outside its gap tolerance", file=sys.stderr)
        return 0 if not args.strict else 1
    return 0


def _finish_verify(cfg, records, constants, t0, args) -> int:
    report = build_report(cfg, records, constants, time.time() - t0)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.json").write_bytes(report_bytes(report))
        if args.plots:
            write_plots(outdir, records)
    else:
        sys.stdout.buffer.write(report_bytes(report))
    fails = report["summary"]["fails"]
    inconclusive = report["summary"]["inconclusive"]
    if fails:
        return 1
    if args.strict and inconclusive:
        return 1
    return 0


def _cmd_verify(args) -> int:
    if not args.all and not args.spec:
        raise DomainError("pass --spec ID or --all")
    if args.all and args.spec:
        raise DomainError("--spec and --all are mutually exclusive")
    if args.seed is None and not args.input:
        raise DomainError("ensemble runs need --seed")
    cfg = _verify_config(args)
    t0 = time.time()
    records, constants = run_verify_config(cfg)
    return _finish_verify(cfg, records, constants, t0, args)


def _cmd_report(args) -> int:
    obj = _load_object(
        args.config,
        ("config",),
        ("version", "checks", "constants", "tallies", "summary", "timing"),
    )
    cfg = obj["config"]
    if not isinstance(cfg, dict) or cfg.get("command") != "verify":
        raise FormatError(f"{args.config}: config does not describe a verify run")
    t0 = time.time()
    records, constants = run_verify_config(cfg)
    return _finish_verify(cfg, records, constants, t0, args)


# ---------------------------------------------------------------------------
# parser


def _add_param_flags(sp):
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--s", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--L", type=int)
    sp.add_argument("--members", type=int)
    sp.add_argument("--evaluator", choices=("dyadic", "ball"))
    sp.add_argument("--law", choices=("uniform", "levels", "sparse"))
    sp.add_argument("--tight", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="capint",
        description="contents, Choquet integrals, capacitary maximal operators, "
        "Riesz capacities, and inequality verification on dyadic grids",
    )
    ap.add_argument("--version", action="version", version=f"capint {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("content", help="content of a cell set")
    c.add_argument("--set", required=True)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--evaluator", choices=("dyadic", "ball"), default="dyadic")
    c.add_argument("--fast", action="store_true", help="looser but quicker ball bounds")
    c.set_defaults(fn_=_cmd_content)

    i = sub.add_parser("integrate", help="Choquet integral of a function")
    i.add_argument("--fn", required=True)
    i.add_argument("--beta", type=float)
    i.add_argument("--alpha", type=float)
    i.add_argument("--s", type=float)
    i.add_argument("--evaluator", choices=("dyadic", "ball", "capacity"), default="dyadic")
    i.add_argument("--fast", action="store_true")
    i.set_defaults(fn_=_cmd_integrate)

    m = sub.add_parser("maximal", help="maximal function of a step function")
    m.add_argument("--fn", required=True)
    m.add_argument(
        "--operator",
        choices=("dyadic", "ball", "ball-uncentered", "capacity"),
        default="dyadic",
    )
    m.add_argument("--beta", type=float)
    m.add_argument("--alpha", type=float)
    m.add_argument("--s", type=float)
    m.add_argument("--fast", action="store_true")
    m.add_argument("--out")
    m.set_defaults(fn_=_cmd_maximal)

    k = sub.add_parser("capacity", help="Riesz capacity of a cell set")
    k.add_argument("--set", required=True)
    k.add_argument("--alpha", type=float, required=True)
    k.add_argument("--s", type=float, required=True)
    k.add_argument("--strict", action="store_true")
    k.set_defaults(fn_=_cmd_capacity)

    v = sub.add_parser("verify", help="run inequality checks")
    v.add_argument("--spec", choices=sorted(verify.CATALOG))
    v.add_argument("--all", action="store_true", help="run the full battery")
    _add_param_flags(v)
    v.add_argument("--seed", type=int)
    v.add_argument("--size", type=int, default=100)
    v.add_argument("--input", action="append", help="check this function instead of an ensemble")
    v.add_argument("--threshold", type=float)
    v.add_argument("--constant", type=float, help="override the comparison constant")
    v.add_argument("--tolerance", type=float, default=verify.GUARD)
    v.add_argument("--strict", action="store_true", help="inconclusive also fails the run")
    v.add_argument("--out", help="directory for report.json and plots")
    v.add_argument("--plots", action="store_true")
    v.set_defaults(fn_=_cmd_verify)

    r = sub.add_parser("report", help="re-run a report from its echoed config")
    r.add_argument("--config", required=True, help="report.json or bare config file")
    r.add_argument("--strict", action="store_true")
    r.add_argument("--out")
    r.add_argument("--plots", action="store_true")
    r.set_defaults(fn_=_cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn_(args)
    except (DomainError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
