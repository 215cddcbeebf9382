"""Cross-validated accuracy grid over (C, k), result files and SVG plots."""

from __future__ import annotations

import csv
import json
import math
import struct
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .baseline import SmoConfig, dual_objective, smo_train
from .datasets import FoldPlan, SvmDataset, make_folds
from .encoding import TrainedModel, make_encoding, predict_many, train
from .errors import ConstraintUnsatisfied, ValidationError
from .tabu import TabuConfig

QUBO = "qubo_svm"
BASELINE = "baseline"

DEFAULT_C_VALUES = tuple(2.0**e for e in range(-6, 5))
DEFAULT_K_VALUES = (1, 2, 3)

# desk-scale budget: 10^5 iterations per run, 20 runs per lambda attempt
DESK_SOLVER = TabuConfig(restarts=10, iterations_per_restart=10_000)


@dataclass(frozen=True)
class GridConfig:
    c_values: tuple[float, ...] = DEFAULT_C_VALUES
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    n_folds: int = 5
    seed: int = 0
    solver: TabuConfig = DESK_SOLVER
    runs: int = 20
    smo: SmoConfig = SmoConfig()
    lambda0: float = 1.0
    max_doublings: int = 32
    include_baseline: bool = True

    def __post_init__(self):
        if not self.c_values or not self.k_values:
            raise ValidationError("C and k grids must be nonempty")
        if any(not c > 0 for c in self.c_values):
            raise ValidationError("C values must be positive")
        if any(int(k) != k or k < 1 for k in self.k_values):
            raise ValidationError("k values must be positive integers")
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")


@dataclass
class ExperimentRecord:
    dataset: str
    method: str
    c: float
    k: int
    fold: int
    accuracy: float | None
    degenerate: bool
    lambda_used: float | None
    solver_evaluations: int
    wall_time: float
    dual_objective: float | None = None
    n_support: int = 0
    status: str = "ok"
    fold_plan: str = ""

    def key(self):
        return (self.dataset, self.method, self.c, self.k, self.fold)


CSV_FIELDS = [f.name for f in fields(ExperimentRecord)]
TIMING_FIELDS = ("wall_time",)


def _cell_seed(seed: int, fold: int, k: int, c: float) -> int:
    """Solver seed from the cell identity alone, so execution order is irrelevant."""
    c_bits = struct.unpack("<Q", struct.pack("<d", float(c)))[0]
    ss = np.random.SeedSequence([seed, fold, k, c_bits])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _accuracy(model: TrainedModel, test: SvmDataset) -> float | None:
    if model.degenerate:
        return None
    return float(np.mean(predict_many(model, test.x) == test.y))


def run_cell(data: SvmDataset, plan: FoldPlan, cfg: GridConfig, method: str, c: float, k: int, fold: int) -> ExperimentRecord:
    train_idx, test_idx = plan.split(fold)
    tr, te = data.subset(train_idx), data.subset(test_idx)
    base = dict(dataset=data.name, method=method, c=float(c), k=int(k), fold=int(fold), fold_plan=plan.digest)
    t0 = time.perf_counter()
    if method == BASELINE:
        model = smo_train(tr, c, cfg.smo)
        status = "ok" if model.converged else "not_converged"
    else:
        solver = replace(cfg.solver, rng_seed=_cell_seed(cfg.seed, fold, k, c))
        try:
            model = train(tr, make_encoding(k, c), solver, cfg.lambda0, cfg.max_doublings, runs=cfg.runs)
        except ConstraintUnsatisfied as exc:
            # no usable model; recorded like a degenerate cell
            return ExperimentRecord(
                **base, accuracy=None, degenerate=True, lambda_used=exc.lam, solver_evaluations=0,
                wall_time=time.perf_counter() - t0, status="infeasible",
            )
        status = "degenerate" if model.degenerate else "ok"
    return ExperimentRecord(
        **base,
        accuracy=_accuracy(model, te),
        degenerate=model.degenerate,
        lambda_used=model.lambda_used,
        solver_evaluations=model.solver_evaluations,
        wall_time=time.perf_counter() - t0,
        dual_objective=dual_objective(tr, model.alpha),
        n_support=int(model.support_mask.sum()),
        status=status,
    )


def grid_cells(cfg: GridConfig):
    cells = []
    for fold in range(cfg.n_folds):
        for c in cfg.c_values:
            if cfg.include_baseline:
                cells.append((BASELINE, c, 0, fold))
            for k in cfg.k_values:
                cells.append((QUBO, c, k, fold))
    return cells


def _run_cell_star(args):
    return run_cell(*args)


def run_grid(data: SvmDataset, cfg: GridConfig = GridConfig(), jobs: int = 1, cells=None, progress=None) -> list[ExperimentRecord]:
    """One record per (method, C, k, fold); every cell uses the same fold plan."""
    plan = make_folds(data, cfg.n_folds, cfg.seed)
    cells = grid_cells(cfg) if cells is None else cells
    tasks = [(data, plan, cfg, *cell) for cell in cells]
    records = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rec in pool.map(_run_cell_star, tasks):
                records.append(rec)
                if progress:
                    progress(rec)
    else:
        for task in tasks:
            rec = _run_cell_star(task)
            records.append(rec)
            if progress:
                progress(rec)
    return sorted(records, key=ExperimentRecord.key)


# -- persistence ----------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_results(records: list[ExperimentRecord], path, config: GridConfig | None = None, extra: dict | None = None) -> Path:
    """Write ``path`` (CSV, header ``CSV_FIELDS``) and a JSON sidecar next to it."""
    if not records:
        raise ValidationError("no records to write")
    path = Path(path)
    records = sorted(records, key=ExperimentRecord.key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, name)) for name in CSV_FIELDS])
    sidecar = {
        "library": "qubo_svm",
        "version": __version__,
        "columns": CSV_FIELDS,
        "n_records": len(records),
        "fold_plans": sorted({r.fold_plan for r in records}),
        "config": asdict(config) if config is not None else None,
    }
    if extra:
        sidecar.update(extra)
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_results(path) -> list[ExperimentRecord]:
    def opt_float(s):
        return None if s == "" else float(s)

    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_FIELDS:
            raise ValidationError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            out.append(
                ExperimentRecord(
                    dataset=row["dataset"],
                    method=row["method"],
                    c=float(row["c"]),
                    k=int(row["k"]),
                    fold=int(row["fold"]),
                    accuracy=opt_float(row["accuracy"]),
                    degenerate=row["degenerate"] == "1",
                    lambda_used=opt_float(row["lambda_used"]),
                    solver_evaluations=int(row["solver_evaluations"]),
                    wall_time=float(row["wall_time"]),
                    dual_objective=opt_float(row["dual_objective"]),
                    n_support=int(row["n_support"]),
                    status=row["status"],
                    fold_plan=row["fold_plan"],
                )
            )
    return out


def mean_accuracy(records) -> dict[tuple, float | None]:
    """Mean fold accuracy per (dataset, method, C, k).

    A cell with any fold lacking an accuracy has no mean (a gap in the plot).
    """
    groups = defaultdict(list)
    for r in records:
        groups[(r.dataset, r.method, r.c, r.k)].append(r.accuracy)
    return {
        key: (None if any(a is None for a in accs) else sum(accs) / len(accs))
        for key, accs in sorted(groups.items())
    }


# -- plotting -------------------------------------------------------------

_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]
_BASELINE_COLOR = "#444444"


def series_label(method: str, k: int) -> str:
    return "baseline" if method == BASELINE else f"k={k}"


def _segments(points):
    """Split ``[(x, y or None)]`` at the gaps."""
    segs, cur = [], []
    for x, y in points:
        if y is None:
            if cur:
                segs.append(cur)
            cur = []
        else:
            cur.append((x, y))
    if cur:
        segs.append(cur)
    return segs


def render_svg(dataset: str, series: dict[str, list[tuple[float, float | None]]]) -> str:
    width, height = 640, 420
    left, right, top, bottom = 60, 120, 40, 50
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts if y is not None]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1
    y0 = math.floor(min(ys, default=0.5) * 10) / 10
    y0, y1 = min(y0, 0.9), 1.0

    def px(x):
        return left + (x - x0) / (x1 - x0) * (width - left - right)

    def py(y):
        return top + (y1 - y) / (y1 - y0) * (height - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<title>{escape(dataset)}: mean CV accuracy</title>',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(dataset)}</text>',
    ]
    # axes and ticks
    ax_b, ax_r = height - bottom, width - right
    out.append(f'<line x1="{left}" y1="{ax_b}" x2="{ax_r}" y2="{ax_b}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{ax_b}" stroke="black"/>')
    for t in range(math.ceil(x0), math.floor(x1) + 1):
        out.append(f'<line x1="{px(t):.1f}" y1="{ax_b}" x2="{px(t):.1f}" y2="{ax_b + 5}" stroke="black"/>')
        out.append(
            f'<text x="{px(t):.1f}" y="{ax_b + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{t}</text>'
        )
    n_yticks = int(round((y1 - y0) / 0.1))
    for i in range(n_yticks + 1):
        t = y0 + i * 0.1
        out.append(f'<line x1="{left - 5}" y1="{py(t):.1f}" x2="{left}" y2="{py(t):.1f}" stroke="black"/>')
        out.append(
            f'<text x="{left - 8}" y="{py(t) + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">{t:.1f}</text>'
        )
    out.append(
        f'<text x="{(left + ax_r) / 2:.1f}" y="{height - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">log2(C)</text>'
    )
    out.append(
        f'<text x="16" y="{(top + ax_b) / 2:.1f}" transform="rotate(-90 16 {(top + ax_b) / 2:.1f})" '
        'text-anchor="middle" font-family="sans-serif" font-size="12">mean CV accuracy</text>'
    )

    for idx, (label, points) in enumerate(series.items()):
        color = _BASELINE_COLOR if label == "baseline" else _COLORS[idx % len(_COLORS)]
        dash = ' stroke-dasharray="6 3"' if label == "baseline" else ""
        out.append(f'<g data-series="{escape(label)}">')
        for seg in _segments(points):
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in seg)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
            for x, y in seg:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        out.append("</g>")
        ly = top + 10 + 18 * idx
        out.append(f'<line x1="{ax_r + 12}" y1="{ly}" x2="{ax_r + 36}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{ax_r + 42}" y="{ly + 4}" font-family="sans-serif" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_series(records, dataset: str) -> dict[str, list[tuple[float, float | None]]]:
    means = mean_accuracy(r for r in records if r.dataset == dataset)
    by_series = defaultdict(list)
    for (_, method, c, k), acc in means.items():
        by_series[(method != BASELINE, k)].append((math.log2(c), acc))
    return {
        series_label(QUBO if is_qubo else BASELINE, k): sorted(pts)
        for (is_qubo, k), pts in sorted(by_series.items())
    }


def emit_plot(records, path) -> list[Path]:
    """One SVG per dataset: accuracy against log2(C), one line per k plus the baseline.

    ``path`` is a directory (files named ``<dataset>.svg``) or, for a single
    dataset, a file ending in ``.svg``.
    """
    records = list(records)
    datasets = sorted({r.dataset for r in records})
    if not datasets:
        raise ValidationError("no records to plot")
    path = Path(path)
    if path.suffix == ".svg":
        if len(datasets) != 1:
            raise ValidationError("several datasets need a directory, not a single .svg path")
        targets = {datasets[0]: path}
    else:
        path.mkdir(parents=True, exist_ok=True)
        targets = {name: path / f"{name}.svg" for name in datasets}
    written = []
    for name, target in targets.items():
        target.write_text(render_svg(name, plot_series(records, name)), encoding="utf-8")
        written.append(target)
    return written
