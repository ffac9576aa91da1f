"""Command-line front end: ``strongfaith {gen,audit,sweep,bounds,verify,replay}``.

Exit codes: 0 success, 1 usage, 2 input parse error, 3 work budget
exceeded, 4 verification failure.  Every file written with ``--out`` gets a
sibling ``<out>.manifest.json`` from which ``replay`` regenerates it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import List, Sequence

from . import bounds as bnd
from . import montecarlo as mc
from .audit import audit
from .errors import StrongFaithError, VerificationError
from .graph import format_dag, make_family, read_dag
from .numeric import format_weights, read_weights
from .verify import run_verification

CSV_HEADER = ["family", "p", "density_or_en", "lambda", "c", "class",
              "samples", "proportion", "ci95", "seed"]
NA = "NA"


class UsageError(StrongFaithError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return "0+unknown"


def fmt(x) -> str:
    if x is None:
        return NA
    return format(float(x), "#.6g")


def _floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None


def _ints(text: str) -> List[int]:
    """Comma list with ``a..b`` ranges, e.g. ``4..10`` or ``4,6,8``."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            if ".." in tok:
                lo, hi = tok.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(tok))
        except ValueError:
            raise UsageError(f"not an integer list: {text!r}") from None
    return out


def _en_list(text: str) -> List[float]:
    if ".." in text and "," not in text:
        return [float(v) for v in _ints(text)]
    return _floats(text)


def _classes(text: str) -> List[str]:
    out = [t.strip() for t in text.split(",") if t.strip()]
    for c in out:
        if c not in mc.CLASS_MODE:
            raise UsageError(f"unknown class {c!r} (choose from M, N1, N2)")
    return out


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_manifest(args, argv: Sequence[str], outputs: List[str], wall: float, config: dict):
    for out in outputs:
        manifest = {
            "command": args.command,
            "argv": list(argv),
            "config": config,
            "seed": getattr(args, "seed", None),
            "version": version(),
            "wall_time": wall,
            "outputs": outputs,
        }
        Path(out + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                                encoding="utf-8")


def cells_csv(cells, bound_for=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = CSV_HEADER + (["bound"] if bound_for else [])
    writer.writerow(header)
    for c in cells:
        row = [c.family, c.p, fmt(c.density), fmt(c.lam), fmt(c.c), c.cls,
               c.samples if c.available else NA, fmt(c.proportion), fmt(c.ci95), c.seed]
        if bound_for:
            row.append(fmt(bound_for(c)))
        writer.writerow(row)
    return buf.getvalue()


def bounds_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER + ["bound"])
    for r in rows:
        writer.writerow([r.family, r.p, NA, fmt(r.lam), fmt(0.0), r.cls,
                         NA, NA, NA, NA, fmt(r.bound)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_gen(args) -> dict:
    g = make_family(args.family, args.p, seed=args.seed, en=args.en)
    _write_text(args.out, format_dag(g))
    outputs = [args.out] if args.out else []
    if args.weights_out:
        rng = mc.sample_stream(args.seed, 0)
        w = mc.sample_weights(g, args.c, args.r, rng)
        _write_text(args.weights_out, format_weights(w))
        outputs.append(args.weights_out)
    return {"outputs": outputs, "config": {"family": args.family, "p": args.p, "en": args.en,
                                           "c": args.c, "r": args.r}}


def cmd_audit(args) -> dict:
    if args.weights:
        w = read_weights(args.weights, radius=args.r)
        if args.dag:
            g = read_dag(args.dag)
            if g != w.dag:
                raise UsageError("the weights file describes a different DAG than --dag")
    else:
        raise UsageError("audit needs --weights")
    report = audit(w, _floats(args.lambda_list), args.zero_threshold, method=args.method)
    _write_text(args.out, report.to_json() + "\n")
    return {"outputs": [args.out] if args.out else [],
            "config": {"lambdas": args.lambda_list, "zero_threshold": args.zero_threshold}}


def _sweep_config(args) -> mc.SweepConfig:
    return mc.SweepConfig(
        lambdas=_floats(args.lambda_list), cs=_floats(args.c_list), radius=args.r,
        samples=args.samples, seed=args.seed, classes=_classes(args.classes),
        zero_threshold=args.zero_threshold,
        workers=args.workers if args.workers else mc.default_workers(),
        full_max_p=args.full_max_p)


def cmd_sweep(args) -> dict:
    cfg = _sweep_config(args)
    cells = []
    ps = _ints(args.p)
    for p in ps:
        if args.family == "random":
            if not args.en_list:
                raise UsageError("--family random needs --en-list")
            cells += mc.estimate_random_ensemble(p, _en_list(args.en_list), cfg)
        else:
            cells += mc.estimate_family(args.family, p, cfg)
    bound_for = None
    if args.bounds:
        if args.family not in bnd.FAMILIES:
            raise UsageError(f"no closed-form bound for family {args.family!r}")
        bound_for = lambda c: bnd.lower_bound(c.family, c.p, c.lam, c.cls, cfg.radius)
    _write_text(args.out, cells_csv(cells, bound_for))
    if args.family == "random":
        print(f"# note: {mc.ENSEMBLE_NOTE}", file=sys.stderr)
    skipped = sorted({(c.p, c.cls, c.reason) for c in cells if not c.available})
    for p, cls, reason in skipped:
        print(f"# note: class {cls} at p={p} not computed: {reason}", file=sys.stderr)
    config = cfg.as_dict()
    config.update(family=args.family, p=ps, en_list=args.en_list)
    if skipped:
        config["unavailable"] = [{"p": p, "class": cls, "reason": reason} for p, cls, reason in skipped]
    if args.family == "random":
        config["note"] = mc.ENSEMBLE_NOTE
    return {"outputs": [args.out] if args.out else [], "config": config}


def cmd_bounds(args) -> dict:
    families = [f.strip() for f in args.family.split(",")]
    rows = bnd.bound_table(families, _ints(args.p_list), _floats(args.lambda_list),
                           _classes(args.classes), args.r)
    _write_text(args.out, bounds_csv(rows))
    return {"outputs": [args.out] if args.out else [],
            "config": {"families": families, "p_list": args.p_list,
                       "lambdas": args.lambda_list, "r": args.r}}


def cmd_verify(args) -> dict:
    progress = None if args.json else (lambda line: print(line, flush=True))
    report = run_verification(args.p_max, args.random, args.seed, args.points, progress)
    if args.json:
        _write_text(args.out, json.dumps(report.to_dict(), indent=2) + "\n")
    elif args.out:
        _write_text(args.out, report.text() + "\n")
    if not report.ok:
        bad = report.first_failure
        raise VerificationError(f"{bad.name} failed: {bad.failure}")
    return {"outputs": [args.out] if args.out else [], "config": {"p_max": args.p_max}}


def cmd_replay(args) -> dict:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    argv = list(manifest["argv"])
    code = main(argv)
    if code:
        raise StrongFaithError(f"replayed command exited with {code}")
    return {"outputs": [], "config": {}, "no_manifest": True}


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strongfaith", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=version())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a DAG (and optionally weights) file")
    gen.add_argument("--family", required=True, choices=mc.FAMILIES)
    gen.add_argument("--p", type=int, required=True)
    gen.add_argument("--en", type=float, help="expected neighborhood size (random family)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.add_argument("--weights-out", help="also sample one weight vector")
    gen.add_argument("--c", type=float, default=0.0)
    gen.add_argument("--r", type=float, default=1.0)
    gen.set_defaults(func=cmd_gen)

    aud = sub.add_parser("audit", help="faithfulness verdicts for one weight vector")
    aud.add_argument("--dag")
    aud.add_argument("--weights", required=True)
    aud.add_argument("--lambda", dest="lambda_list", default="0.1,0.01,0.001")
    aud.add_argument("--zero-threshold", type=float, default=mc.ZERO_THRESHOLD)
    aud.add_argument("--r", type=float, default=1.0)
    aud.add_argument("--method", choices=("kernel", "enumerate"), default="kernel")
    aud.add_argument("--out")
    aud.set_defaults(func=cmd_audit)

    sw = sub.add_parser("sweep", help="Monte Carlo unfaithful-volume estimates")
    sw.add_argument("--family", required=True, choices=mc.FAMILIES)
    sw.add_argument("--p", required=True, help="size or list, e.g. 10 or 4..10")
    sw.add_argument("--en-list", help="expected neighborhood sizes, e.g. 1..5 or 2,3.5")
    sw.add_argument("--lambda-list", default="0.1,0.01,0.001")
    sw.add_argument("--c-list", default="0")
    sw.add_argument("--r", type=float, default=1.0)
    sw.add_argument("--samples", type=int, default=10_000)
    sw.add_argument("--classes", default="M,N1,N2")
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--zero-threshold", type=float, default=mc.ZERO_THRESHOLD)
    sw.add_argument("--workers", type=int, default=0,
                    help=f"threads (default ${mc.THREADS_ENV} or 1)")
    sw.add_argument("--full-max-p", type=int, default=mc.FULL_CLASS_MAX_P)
    sw.add_argument("--bounds", action="store_true", help="append the closed-form lower bound")
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)

    bd = sub.add_parser("bounds", help="closed-form lower bounds")
    bd.add_argument("--family", required=True, help="tree, cycle, bipartite (comma list)")
    bd.add_argument("--p-list", required=True)
    bd.add_argument("--lambda-list", default="0.1,0.01,0.001")
    bd.add_argument("--classes", default="M,N1,N2")
    bd.add_argument("--r", type=float, default=1.0)
    bd.add_argument("--out")
    bd.set_defaults(func=cmd_bounds)

    ver = sub.add_parser("verify", help="exact/numeric/graph cross-check suite")
    ver.add_argument("--p-max", type=int, default=5)
    ver.add_argument("--random", type=int, default=200, help="extra random DAGs")
    ver.add_argument("--points", type=int, default=100, help="evaluation points per triple")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--json", action="store_true")
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify)

    rep = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    rep.add_argument("manifest")
    rep.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        start = time.perf_counter()
        info = args.func(args)
        wall = time.perf_counter() - start
        if info["outputs"] and not info.get("no_manifest"):
            _write_manifest(args, argv, info["outputs"], wall, info["config"])
        return 0
    except StrongFaithError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
