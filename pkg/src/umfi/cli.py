"""Command-line entry point: ``umfi <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .benchmark import run_benchmark, synthetic_dataset
from .core import (SeedSpec, TaskKind, UmfiError, load_csv, write_csv_atomic,
                   write_json_atomic)
from .forest import EvaluationFunction, ForestConfig
from .importance import MciConfig, MciMode, UmfiConfig, mci, umfi
from .info import dependence_removal_report
from .removal import BackendKind, RemovalBackend, s_star_matrix
from .simulate import SimDesign, run_study

log = logging.getLogger("umfi")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive(v):
    i = int(v)
    if i < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return i


def _unit(v):
    x = float(v)
    if not 0.0 < x < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return x


def _common(p: argparse.ArgumentParser, forest=True):
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=None,
                   help="master seed (default: $UMFI_SEED or 42)")
    g.add_argument("--threads", type=_positive, default=None,
                   help="worker threads (default: all cores); never changes results")
    g.add_argument("--verbose", action="store_true")
    g.add_argument("--no-timing", action="store_true",
                   help="write null wall times so JSON output is byte-reproducible")
    if forest:
        f = p.add_argument_group("forest")
        f.add_argument("--trees", type=_positive, default=100)
        f.add_argument("--mtry", type=_positive, default=None)
        f.add_argument("--min-node-size", type=_positive, default=None)


def _removal_flags(p, method_required=False):
    p.add_argument("--method", choices=["ot", "lr"], default=None if method_required else "ot",
                   required=method_required)
    p.add_argument("--bin-size", type=_positive, default=100)
    p.add_argument("--alpha", type=_unit, default=0.01)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="umfi", description="Ultra marginal feature importance")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("umfi", help="UMFI scores for every feature")
    p.add_argument("--input", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--task", choices=["reg", "cls"], default="reg")
    _removal_flags(p)
    p.add_argument("--no-clamp", action="store_true", help="keep negative raw scores")
    p.add_argument("--json", required=True)
    _common(p)

    p = sub.add_parser("mci", help="MCI scores for every feature")
    p.add_argument("--input", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--task", choices=["reg", "cls"], default="reg")
    p.add_argument("--mode", choices=["exact", "k3"], default="exact")
    p.add_argument("--json", required=True)
    _common(p)

    p = sub.add_parser("remove-deps", help="write features with one feature's dependence removed")
    p.add_argument("--input", required=True)
    p.add_argument("--protected", required=True)
    p.add_argument("--response", default=None,
                   help="column to carry through untouched (not transformed)")
    _removal_flags(p)
    p.add_argument("--output", required=True)
    _common(p, forest=False)

    p = sub.add_parser("diagnose", help="dependence-removal and distortion diagnostics")
    p.add_argument("--input", required=True)
    p.add_argument("--response", default=None, help="column to exclude from the feature set")
    p.add_argument("--features", required=True, help="comma-separated features to audit")
    p.add_argument("--methods", default="ot,lr")
    p.add_argument("--bin-size", type=_positive, default=100)
    p.add_argument("--alpha", type=_unit, default=0.01)
    p.add_argument("--json", required=True)
    _common(p)

    p = sub.add_parser("simulate", help="replicated simulation study")
    p.add_argument("--design", choices=["corr-int", "corr", "xor"], required=True)
    p.add_argument("--reps", type=_positive, default=100)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--methods", default="mci,umfi-lr,umfi-ot")
    p.add_argument("--json", required=True)
    p.add_argument("--csv-points", default=None)
    _common(p)

    p = sub.add_parser("benchmark", help="runtime of MCI exact vs UMFI-OT")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", default=None)
    src.add_argument("--synthetic", action="store_true",
                     help="Gaussian features instead of a CSV (the default without --input)")
    p.add_argument("--response", default=None)
    p.add_argument("--task", choices=["reg", "cls"], default="cls")
    p.add_argument("--n", type=_positive, default=571, help="rows for --synthetic")
    p.add_argument("--p-min", type=_positive, default=5)
    p.add_argument("--p-max", type=_positive, default=15)
    p.add_argument("--extra-p", default="", help="comma-separated extra sizes, UMFI only above 15")
    p.add_argument("--mci-max", type=_positive, default=15)
    p.add_argument("--json", required=True)
    _common(p)
    return parser


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("UMFI_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"UMFI_SEED must be an integer, got {env!r}") from None
    return 42


def _forest(args) -> ForestConfig:
    return ForestConfig(args.trees, args.mtry, args.min_node_size)


def _validate(args):
    outputs = [getattr(args, k, None) for k in ("json", "csv_points", "output")]
    outputs = [os.path.abspath(o) for o in outputs if o]
    if len(set(outputs)) != len(outputs):
        raise UsageError("output paths must differ")
    inp = getattr(args, "input", None)
    if inp and os.path.abspath(inp) in outputs:
        raise UsageError("refusing to overwrite the input file")
    if args.command == "benchmark":
        if args.input and not args.response:
            raise UsageError("benchmark --input requires --response")
        if args.p_min > args.p_max:
            raise UsageError("--p-min must not exceed --p-max")


def _cmd_umfi(args, seed):
    d = load_csv(args.input, args.response, args.task)
    e = EvaluationFunction(d.task, _forest(args), SeedSpec(seed))
    backend = RemovalBackend(BackendKind(args.method), args.bin_size, args.alpha)
    rep = umfi(d, e, UmfiConfig(backend, clamp_negative=not args.no_clamp))
    write_json_atomic(args.json, rep.to_json(include_timing=not args.no_timing))


def _cmd_mci(args, seed):
    d = load_csv(args.input, args.response, args.task)
    e = EvaluationFunction(d.task, _forest(args), SeedSpec(seed))
    rep = mci(d, e, MciConfig(MciMode(args.mode)))
    write_json_atomic(args.json, rep.to_json(include_timing=not args.no_timing))


def _read_features(path, response):
    """Load a CSV for unsupervised use; ``response`` (if any) is split off untouched."""
    import csv
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise UmfiError(f"{path}: empty file")
    if response is None:
        # any feature works as a stand-in response; it is never transformed
        d = load_csv(path, header[-1], TaskKind.REGRESSION) if len(header) > 1 else None
        if d is None:
            raise UmfiError(f"{path}: need at least two columns")
        X = np.column_stack([d.features, d.response])
        names = list(d.feature_names) + [header[-1]]
        return X, names, None
    d = load_csv(path, response, TaskKind.REGRESSION)
    return d.features, list(d.feature_names), d.response


def _cmd_remove_deps(args, seed):
    X, names, y = _read_features(args.input, args.response)
    if args.protected not in names:
        raise UmfiError(f"no feature named {args.protected!r}")
    j = names.index(args.protected)
    if len(names) < 2:
        raise UmfiError("need at least two features")
    backend = RemovalBackend(BackendKind(args.method), args.bin_size, args.alpha)
    out = s_star_matrix(X, j, backend)
    header = [n for i, n in enumerate(names) if i != j]
    if y is not None:
        out = np.column_stack([out, y])
        header.append(args.response)
    write_csv_atomic(args.output, header, [[repr(float(v)) for v in row] for row in out])


def _cmd_diagnose(args, seed):
    X, names, _ = _read_features(args.input, args.response)
    from .core import Dataset
    d = Dataset(X, names, X[:, 0], TaskKind.REGRESSION)
    feats = [f.strip() for f in args.features.split(",") if f.strip()]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("ot", "lr"):
            raise UsageError(f"unknown method {m!r}; choose from ot, lr")
    for f in feats:
        d.index_of(f)
    backends = [RemovalBackend(BackendKind(m), args.bin_size, args.alpha) for m in methods]
    e = EvaluationFunction(TaskKind.REGRESSION, _forest(args), SeedSpec(seed))
    reports = dependence_removal_report(d, feats, backends, e)
    write_json_atomic(args.json, {"seed": seed, "reports": [r.to_json() for r in reports]})


def _cmd_simulate(args, seed):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("mci", "mci-k3", "umfi-lr", "umfi-ot"):
            raise UsageError(f"unknown method {m!r}")
    design = SimDesign(args.design, args.n, args.reps)

    def progress(r):
        log.info("replication %d/%d done", r + 1, args.reps)

    s = run_study(design, methods, _forest(args), SeedSpec(seed), progress)
    out = s.to_json()
    out.update(seed=seed, n=args.n, mci_mode="exact")
    write_json_atomic(args.json, out)
    if args.csv_points:
        write_csv_atomic(args.csv_points, ["replication", "method", "feature", "share"],
                         ([r, m, f, repr(v)] for r, m, f, v in s.points()))


def _cmd_benchmark(args, seed):
    if args.input:
        d = load_csv(args.input, args.response, args.task)
    else:
        d = synthetic_dataset(args.n, max(50, args.p_max), seed)
    p_range = list(range(args.p_min, args.p_max + 1))
    p_range += [int(v) for v in args.extra_p.split(",") if v.strip()]

    def progress(row):
        log.info("p=%d umfi %.2fs mci %s", row.p, row.wall_time_umfi, row.wall_time_mci)

    res = run_benchmark(d, p_range, SeedSpec(seed), _forest(args), args.mci_max, progress)
    out = res.to_json()
    out["seed"] = seed
    out["source"] = args.input or "synthetic"
    write_json_atomic(args.json, out)


COMMANDS = {
    "umfi": _cmd_umfi,
    "mci": _cmd_mci,
    "remove-deps": _cmd_remove_deps,
    "diagnose": _cmd_diagnose,
    "simulate": _cmd_simulate,
    "benchmark": _cmd_benchmark,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
        seed = _resolve_seed(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    if args.threads:
        import numba
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        COMMANDS[args.command](args, seed)
    except UsageError as exc:
        print(f"umfi {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (UmfiError, ValueError, OSError) as exc:
        print(f"umfi {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
