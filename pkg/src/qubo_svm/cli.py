"""Command-line entry point: ``qubo-svm <command>``.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 no balanced
solution within the lambda doublings.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, datasets
from .encoding import build_qubo, make_encoding, predict_many, train
from .errors import ConstraintUnsatisfied, NoSupportVectors, ValidationError
from .experiment import (
    DESK_SOLVER,
    DEFAULT_C_VALUES,
    DEFAULT_K_VALUES,
    GridConfig,
    emit_plot,
    emit_results,
    mean_accuracy,
    read_results,
    run_grid,
)
from .kernels import BACKEND
from .qubo import brute_force_solve, read_qubo, write_qubo
from .tabu import TabuConfig, multistart_best

log = logging.getLogger("qubo_svm")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INFEASIBLE = 0, 1, 2, 3


def parse_number(text: str) -> float:
    """``0.5``, ``2^-3`` or ``2**-3``."""
    t = text.strip().replace("**", "^")
    try:
        if "^" in t:
            base, exp = t.split("^", 1)
            return float(base) ** float(exp)
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_list(text: str, conv=parse_number):
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(conv(s) for s in items)


def _solver_args(p: argparse.ArgumentParser, defaults: TabuConfig, runs: int):
    g = p.add_argument_group("tabu search budget")
    g.add_argument("--restarts", type=int, default=defaults.restarts)
    g.add_argument("--iterations", type=int, default=defaults.iterations_per_restart,
                   help="iterations per restart (default depends on instance size)")
    g.add_argument("--tenure", type=int, default=defaults.tabu_tenure)
    g.add_argument("--runs", type=int, default=runs, help="independent runs per QUBO")
    g.add_argument("--time-limit", type=float, default=None, help="seconds per run")


def _tabu_config(args, seed: int) -> TabuConfig:
    return TabuConfig(
        restarts=args.restarts,
        iterations_per_restart=args.iterations,
        tabu_tenure=args.tenure,
        rng_seed=seed,
        time_limit=args.time_limit,
    )


def cmd_fetch(args) -> int:
    names = args.dataset or list(datasets.DATASETS)
    recorded = datasets.fetch(names, args.data_dir)
    for fname, digest in sorted(recorded.items()):
        print(f"{fname}  sha256={digest}")
    return EXIT_OK


def cmd_prepare(args) -> int:
    data = datasets.load_dataset(args.dataset, args.data_dir)
    summary = {
        "dataset": data.name,
        "N": data.n,
        "d": data.d,
        "positives": int(np.sum(data.y == 1)),
        "negatives": int(np.sum(data.y == -1)),
        "provenance": data.provenance,
    }
    print(json.dumps(summary, indent=2))
    if args.out:
        table = np.column_stack([data.x, data.y])
        header = ",".join([f"x{i}" for i in range(data.d)] + ["label"])
        np.savetxt(args.out, table, delimiter=",", header=header, comments="", fmt="%.17g")
    return EXIT_OK


def cmd_train(args) -> int:
    data = datasets.load_dataset(args.dataset, args.data_dir)
    enc = make_encoding(args.k, args.c)
    accepted = {}

    def remember(problem, report, residual):
        log.info("lambda=%g energy=%.6g residual=%d", problem.lam, report.best_energy, residual)
        accepted["problem"] = problem

    model = train(
        data, enc, _tabu_config(args, args.seed), args.lambda0, args.max_doublings,
        runs=args.runs, exact=args.exact, on_attempt=remember,
    )
    if args.dump_qubo:
        problem = accepted["problem"]
        write_qubo(problem.qubo, args.dump_qubo,
                   comment=f"{data.name} k={args.k} C={args.c!r} lambda={problem.lam!r}")
    summary = {
        "dataset": data.name,
        "C": args.c,
        "k": args.k,
        "qubo_variables": data.n * args.k,
        "lambda_used": model.lambda_used,
        "degenerate": model.degenerate,
        "support_vectors": int(model.support_mask.sum()),
        "train_accuracy": None if model.degenerate else float(np.mean(predict_many(model, data.x) == data.y)),
        "b": None if model.degenerate else model.b,
        "w": model.w.tolist(),
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_solve(args) -> int:
    q = read_qubo(args.qubo_file)
    if args.exact:
        report = brute_force_solve(q)
    else:
        report = multistart_best(q, _tabu_config(args, args.seed), args.runs)
    print(json.dumps({
        "n": q.n,
        "energy": report.best_energy,
        "assignment": "".join(str(int(b)) for b in report.best_assignment),
        "evaluations": report.evaluations,
        "restarts_used": report.restarts_used,
        "truncated": report.truncated,
        "wall_time": report.wall_time,
    }, indent=2))
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = GridConfig(
        c_values=args.c_grid,
        k_values=args.k_grid,
        n_folds=args.folds,
        seed=args.seed,
        solver=_tabu_config(args, 0),
        runs=args.runs,
        lambda0=args.lambda0,
        max_doublings=args.max_doublings,
        include_baseline=not args.no_baseline,
    )
    out = Path(args.out)
    all_records = []
    for name in args.dataset:
        data = datasets.load_dataset(name, args.data_dir)

        def progress(rec):
            acc = "-" if rec.accuracy is None else f"{rec.accuracy:.3f}"
            log.info("%s %s C=%g k=%d fold=%d acc=%s (%.1fs)", rec.dataset, rec.method, rec.c, rec.k, rec.fold, acc,
                     rec.wall_time)

        all_records.extend(run_grid(data, cfg, jobs=args.jobs, progress=progress))
    emit_results(all_records, out, cfg, extra={"kernel_backend": BACKEND, "datasets": args.dataset})
    for (ds, method, c, k), acc in mean_accuracy(all_records).items():
        label = "baseline" if method == "baseline" else f"k={k}"
        print(f"{ds:6s} {label:8s} log2C={np.log2(c):+5.1f}  " + ("degenerate" if acc is None else f"{acc:.3f}"))
    if args.plot_dir:
        for p in emit_plot(all_records, args.plot_dir):
            print(f"wrote {p}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    records = read_results(args.results)
    out = args.out or Path(args.results).with_suffix("")
    for p in emit_plot(records, out):
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qubo-svm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("--data-dir", default=None, help=f"data directory (default ${datasets.DATA_ENV} or ~/.cache/qubo_svm)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download canonical dataset files and verify checksums")
    p.add_argument("--dataset", action="append", choices=datasets.DATASETS)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("prepare", help="load a dataset with its two-class preparation and summarise it")
    p.add_argument("dataset", choices=datasets.DATASETS)
    p.add_argument("--out", help="write the prepared matrix as CSV")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train one k-bit QUBO-SVM on a full dataset")
    p.add_argument("--dataset", required=True, choices=datasets.DATASETS)
    p.add_argument("--c", type=parse_number, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lambda0", type=parse_number, default=1.0)
    p.add_argument("--max-doublings", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="brute-force solve (small instances only)")
    p.add_argument("--dump-qubo", help="write the accepted QUBO in text format")
    _solver_args(p, DESK_SOLVER, 20)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid", help="cross-validated accuracy over a (C, k) grid")
    p.add_argument("--dataset", action="append", required=True, choices=datasets.DATASETS)
    p.add_argument("--c-grid", type=parse_list, default=DEFAULT_C_VALUES, help="e.g. 2^-6,2^-5,1,2")
    p.add_argument("--k-grid", type=lambda s: parse_list(s, int), default=DEFAULT_K_VALUES)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda0", type=parse_number, default=1.0)
    p.add_argument("--max-doublings", type=int, default=32)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--no-baseline", action="store_true")
    p.add_argument("--out", default="results.csv")
    p.add_argument("--plot-dir", help="also write SVG plots here")
    _solver_args(p, DESK_SOLVER, 20)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("solve", help="minimise a QUBO file")
    p.add_argument("qubo_file")
    p.add_argument("--exact", action="store_true", help="exhaustive search (n <= 24)")
    p.add_argument("--seed", type=int, default=0)
    _solver_args(p, TabuConfig(), 1)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("plot", help="SVG accuracy plots from a results CSV")
    p.add_argument("results")
    p.add_argument("--out", help="output directory or .svg file")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConstraintUnsatisfied as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValidationError, NoSupportVectors, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
