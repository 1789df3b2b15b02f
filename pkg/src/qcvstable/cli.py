"""Command-line interface: ``qcvstable {table,estimate,simulate,evaluate,robustness}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__, benchmarks, evaluation, qcv, stable
from .errors import DataError, StableError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
MIN_POINTS = 50
# replication counts above this need --full-scale
DESK_K_LIMIT = 20_000


class UsageError(Exception):
    pass


# -- data files ----------------------------------------------------------------

def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_data(path, column: str | None = None) -> np.ndarray:
    """Read observations from a plain one-per-line file or a CSV file.

    CSV input uses ``column`` if given, otherwise the first column whose
    first data entry is numeric. Non-finite or unparsable entries raise
    DataError listing their line numbers.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    lines = text.splitlines()
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise DataError(f"{path}: no data")
    first = rows[0][1]
    is_csv = "," in first or ";" in first or "\t" in first or not _is_number(first.strip())
    if is_csv:
        delim = max(",;\t", key=first.count)
        parsed = list(csv.reader(io.StringIO("\n".join(ln for _, ln in rows)), delimiter=delim))
        linenos = [i for i, _ in rows]
        header = [h.strip() for h in parsed[0]]
        has_header = not all(_is_number(h) for h in header)
        body = parsed[1:] if has_header else parsed
        body_lines = linenos[1:] if has_header else linenos
        if column is not None:
            if not has_header or column not in header:
                raise DataError(f"{path}: column {column!r} not found")
            col = header.index(column)
        else:
            col = None
            for j in range(len(body[0]) if body else 0):
                if _is_number(body[0][j].strip()):
                    col = j
                    break
            if col is None:
                raise DataError(f"{path}: no numeric column")
        cells = [(ln, r[col].strip() if col < len(r) else "") for ln, r in zip(body_lines, body)]
    else:
        if column is not None:
            raise DataError(f"{path}: --column given but file has a single unnamed column")
        cells = [(ln, s.strip()) for ln, s in rows]
    values, bad = [], []
    for ln, s in cells:
        try:
            v = float(s)
        except ValueError:
            bad.append(ln)
            continue
        if not math.isfinite(v):
            bad.append(ln)
        else:
            values.append(v)
    if bad:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
        raise DataError(f"{path}: non-finite or unparsable values on lines {shown}")
    if len(values) < MIN_POINTS:
        raise DataError(f"{path}: {len(values)} values, need at least {MIN_POINTS}")
    return np.asarray(values)


# -- helpers -------------------------------------------------------------------

def _floats(s: str) -> tuple:
    try:
        return tuple(float(v) for v in s.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _ints(s: str) -> tuple:
    try:
        return tuple(int(v) for v in s.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _methods(s: str) -> tuple:
    ms = tuple(m.strip().lower() for m in s.split(",") if m.strip())
    bad = [m for m in ms if m not in evaluation.METHODS]
    if bad or not ms:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {','.join(evaluation.METHODS)}")
    return ms


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def manifest(args, command: str, digests: dict | None = None) -> dict:
    cfg = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items()
           if k not in ("func", "command")}
    return {"command": command, "config": cfg, "seed": getattr(args, "seed", None),
            "version": __version__, "table_digests": digests or {}}


def _emit(text: str, out: str | None, man: dict):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
        Path(str(out) + ".manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
        sys.stderr.write("manifest: " + json.dumps(man, sort_keys=True) + "\n")


# -- commands ------------------------------------------------------------------

def cmd_table(args) -> int:
    lo, hi = args.range if args.range else (None, None)
    if args.spec == "mch":
        table = benchmarks.build_nu_table(lo or 0.5, hi or 2.0, args.step)
    else:
        if args.custom:
            a, b, d = args.custom
            spec = qcv.RatioSpec(a, b, d, "custom")
        else:
            spec = qcv.BUILTIN_SPECS[args.spec]
        table = qcv.build_table(spec, lo, hi, args.step)
    man = manifest(args, "table", {"table": table.digest()})
    if args.out:
        table.to_csv(args.out)
        Path(str(args.out) + ".manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
        print(f"wrote {len(table)} rows ({table.direction}) to {args.out}", file=sys.stderr)
    else:
        head = "#" + ";".join(f"{k}={v}" for k, v in table.meta.items())
        rows = "\n".join(f"{a:.17g},{v:.17g}" for a, v in zip(table.alphas, table.values))
        _emit(f"{head}\nalpha,N\n{rows}\n", None, man)
    return EXIT_OK


def cmd_estimate(args) -> int:
    x = read_data(args.input, args.column)
    if args.standardize:
        q25, med, q75 = np.quantile(x, [0.25, 0.5, 0.75])
        if not q75 > q25:
            raise DataError("interquartile range is zero; cannot standardize")
        x = (x - med) / (q75 - q25)
    # real data have unknown location and scale
    est = evaluation.Estimators(mle_cfg=benchmarks.MleConfig(standardize=True),
                                reg_cfg=benchmarks.RegConfig(fit_intercept=True, standardize=True))
    res = est.one(x, args.method)
    res.n = x.size
    out = res.to_dict()
    if args.bootstrap:
        seed = _seed(args)
        boot = evaluation.bootstrap_ci(x, args.method, args.bootstrap, args.level, seed, est)
        out["seed"] = seed
        out["ci"] = boot.to_dict()
        out["failures"] = boot.failures
    else:
        out["seed"] = args.seed
    out["manifest"] = manifest(args, "estimate", est.digests())
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = _seed(args)
    params = stable.StableParams(args.alpha, args.beta, args.scale, args.location)
    x = stable.sample(params, args.n, seed)
    text = "".join(f"{v:.17g}\n" for v in x)
    _emit(text, args.out, manifest(args, "simulate"))
    return EXIT_OK


def _check_k(args):
    if args.full_scale:
        args.k = evaluation.FULL_SCALE_K
    elif args.k > DESK_K_LIMIT:
        raise UsageError(f"k={args.k} exceeds the desk limit {DESK_K_LIMIT}; pass --full-scale for full-size runs")


def cmd_evaluate(args) -> int:
    _check_k(args)
    seed = _seed(args)
    cfg = evaluation.MonteCarloConfig(k=args.k, sample_sizes=args.ns, alphas=args.alphas,
                                      methods=args.methods, master_seed=seed, workers=args.threads)
    est = evaluation.Estimators() if args.threads == 1 else None
    report = evaluation.run_rmse_experiment(cfg, est)
    digests = (est or evaluation.Estimators()).digests()
    text = report.to_json() + "\n" if args.format == "json" else report.to_csv()
    _emit(text, args.out, manifest(args, "evaluate", digests))
    return EXIT_OK


def cmd_robustness(args) -> int:
    _check_k(args)
    seed = _seed(args)
    if 0.0 not in args.betas:
        raise UsageError("betas must include 0")
    cfg = evaluation.MonteCarloConfig(k=args.k, sample_sizes=(args.n,), alphas=args.alphas, betas=args.betas,
                                      methods=args.methods, master_seed=seed, workers=args.threads)
    est = evaluation.Estimators() if args.threads == 1 else None
    grid = evaluation.run_bias_grid(cfg, est)
    digests = (est or evaluation.Estimators()).digests()
    text = grid.to_json() + "\n" if args.format == "json" else grid.to_csv()
    _emit(text, args.out, manifest(args, "robustness", digests))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcvstable", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table", help="build a lookup table")
    t.add_argument("--spec", choices=("n1", "n2", "mch"), default="n1")
    t.add_argument("--custom", type=_floats, metavar="A,B,D", help="custom window triple")
    t.add_argument("--range", type=_floats, metavar="LO,HI")
    t.add_argument("--step", type=float, default=qcv.TABLE_STEP)
    t.add_argument("--out", help="output CSV path (default: stdout)")
    t.set_defaults(func=cmd_table)

    e = sub.add_parser("estimate", help="estimate alpha from a data file")
    e.add_argument("input")
    e.add_argument("--method", choices=evaluation.METHODS, default="n1")
    e.add_argument("--column", help="CSV column name (default: first numeric column)")
    e.add_argument("--bootstrap", type=int, metavar="B", default=0, help="bootstrap resamples for a CI")
    e.add_argument("--level", type=float, default=0.95)
    e.add_argument("--seed", type=int)
    e.add_argument("--standardize", action="store_true", help="subtract the median and divide by the IQR first")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="draw a stable sample")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--location", type=float, default=0.0)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    for name, helptext in (("evaluate", "Monte Carlo RMSE table"), ("robustness", "bias grid over (alpha, beta)")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("--k", type=int, default=evaluation.DESK_SCALE_K)
        c.add_argument("--full-scale", action="store_true", help=f"use k={evaluation.FULL_SCALE_K}")
        c.add_argument("--seed", type=int)
        c.add_argument("--threads", type=int, default=1)
        c.add_argument("--format", choices=("csv", "json"), default="csv")
        c.add_argument("--out")
        if name == "evaluate":
            c.add_argument("--methods", type=_methods, default=("n1", "n2", "mch", "reg", "mle"))
            c.add_argument("--alphas", type=_floats, default=evaluation.TABLE_ALPHAS)
            c.add_argument("--ns", type=_ints, default=(250, 500, 1000))
            c.set_defaults(func=cmd_evaluate)
        else:
            c.add_argument("--methods", type=_methods, default=("n1",))
            c.add_argument("--alphas", type=_floats, default=evaluation.ROBUSTNESS_ALPHAS)
            c.add_argument("--betas", type=_floats, default=evaluation.ROBUSTNESS_BETAS)
            c.add_argument("--n", type=int, default=1000)
            c.set_defaults(func=cmd_robustness)
    return p


def _error(kind: str, msg: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": msg}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except DataError as exc:
        return _error("data", str(exc), EXIT_DATA)
    except StableError as exc:
        return _error("numeric", str(exc), EXIT_NUMERIC)
    except ValueError as exc:
        return _error("usage", str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
