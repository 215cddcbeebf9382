"""Multistart single-flip tabu search for QUBO instances."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import ValidationError
from .qubo import QuboInstance, SolverReport, energy

MAX_ITERATIONS = 1_000_000


@dataclass(frozen=True)
class TabuConfig:
    """Search budget and seed.

    ``iterations_per_restart`` and ``tabu_tenure`` default to values that
    depend on the instance size (see :meth:`resolve`).
    """

    restarts: int = 20
    iterations_per_restart: int | None = None
    tabu_tenure: int | None = None
    rng_seed: int = 0
    time_limit: float | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.iterations_per_restart is not None and self.iterations_per_restart < 1:
            raise ValidationError("iterations_per_restart must be >= 1")
        if self.tabu_tenure is not None and self.tabu_tenure < 1:
            raise ValidationError("tabu_tenure must be >= 1")
        if (
            self.tabu_tenure is not None
            and self.iterations_per_restart is not None
            and self.tabu_tenure >= self.iterations_per_restart
        ):
            raise ValidationError("tabu_tenure must be smaller than iterations_per_restart")
        if not 0 <= self.rng_seed < 2**64:
            raise ValidationError("rng_seed must be an unsigned 64-bit integer")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValidationError("time_limit must be positive")

    def resolve(self, n: int) -> tuple[int, int]:
        """Concrete ``(iterations_per_restart, tabu_tenure)`` for an n-variable instance."""
        iters = self.iterations_per_restart
        if iters is None:
            iters = min(10 * n * 1000, MAX_ITERATIONS)
        tenure = self.tabu_tenure
        if tenure is None:
            tenure = max(10, n // 10)
        return iters, min(tenure, max(iters - 1, 1))


def run_seed(rng_seed: int, run: int) -> np.random.Generator:
    """Independent generator for run ``run`` of a multistart search."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([rng_seed, run])))


def _starts(n: int, restarts: int, rng: np.random.Generator, zero_first: bool) -> np.ndarray:
    starts = rng.integers(0, 2, size=(restarts, n), dtype=np.uint8)
    if zero_first:
        starts[0] = 0
    return np.ascontiguousarray(starts)


def _solve_run(q: QuboInstance, cfg: TabuConfig, run: int, trace: bool = False) -> SolverReport:
    iters, tenure = cfg.resolve(q.n)
    starts = _starts(q.n, cfg.restarts, run_seed(cfg.rng_seed, run), zero_first=(run == 0))
    t0 = time.perf_counter()
    z, _, evals, used, truncated, tr = kernels.tabu_search(
        q.pair_matrix,
        q.diag,
        starts,
        iters,
        tenure,
        cfg.time_limit if cfg.time_limit is not None else -1.0,
        trace,
    )
    z = np.asarray(z, dtype=np.uint8)
    return SolverReport(
        best_assignment=z,
        best_energy=energy(q, z),
        evaluations=int(evals),
        restarts_used=int(used),
        wall_time=time.perf_counter() - t0,
        truncated=bool(truncated),
        trace=tr,
    )


def tabu_solve(q: QuboInstance, cfg: TabuConfig = TabuConfig(), trace: bool = False) -> SolverReport:
    """Best assignment over ``cfg.restarts`` tabu walks.

    The first walk starts from all zeros, the rest from uniform random
    assignments.  With ``trace=True`` the report carries the incumbent
    energy after every iteration.
    """
    return _solve_run(q, cfg, 0, trace=trace)


def merge_reports(reports: list[SolverReport]) -> SolverReport:
    """Combine reports; the lowest energy wins, ties go to the earliest report."""
    if not reports:
        raise ValidationError("nothing to merge")
    best = reports[0]
    for rep in reports[1:]:
        if rep.best_energy < best.best_energy:
            best = rep
    return replace(
        best,
        evaluations=sum(r.evaluations for r in reports),
        restarts_used=sum(r.restarts_used for r in reports),
        wall_time=sum(r.wall_time for r in reports),
        truncated=any(r.truncated for r in reports),
        trace=None,
    )


def multistart_best(q: QuboInstance, cfg: TabuConfig = TabuConfig(), runs: int = 1) -> SolverReport:
    """Best of ``runs`` independent :func:`tabu_solve` calls with decorrelated seeds."""
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    return merge_reports([_solve_run(q, cfg, r) for r in range(runs)])
