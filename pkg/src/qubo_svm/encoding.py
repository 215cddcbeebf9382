"""k-bit QUBO formulation of the linear SVM dual, the penalty loop, and decoding.

Each dual weight ``alpha_i`` is spread over ``k`` bits with weights
``p_j = C 2^(j-1) / (2^k - 1)``, so ``alpha_i = sum_j p_j z[i, j]`` takes the
values ``0, C/(2^k-1), ..., C``.  Bits are laid out point by point, lowest
weight first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import SvmDataset
from .errors import ConstraintUnsatisfied, NoSupportVectors, ValidationError
from .qubo import QuboInstance, SolverReport, brute_force_solve
from .tabu import TabuConfig, multistart_best

DEFAULT_LAMBDA0 = 1.0
DEFAULT_MAX_DOUBLINGS = 32


@dataclass(frozen=True)
class PrecisionEncoding:
    k: int
    c: float
    p: np.ndarray

    @property
    def levels(self) -> int:
        """Largest integer bit-group value, ``2^k - 1``."""
        return (1 << self.k) - 1

    @property
    def step(self) -> float:
        return self.c / self.levels


def make_encoding(k: int, c: float) -> PrecisionEncoding:
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k!r}")
    if not np.isfinite(c) or c <= 0:
        raise ValidationError(f"C must be positive, got {c!r}")
    k = int(k)
    levels = (1 << k) - 1
    p = np.array([c * (1 << j) / levels for j in range(k)], dtype=np.float64)
    p.setflags(write=False)
    return PrecisionEncoding(k, float(c), p)


def _bit_groups(enc: PrecisionEncoding, z, n_points: int | None = None) -> np.ndarray:
    z = np.asarray(z)
    if z.ndim != 1 or z.size % enc.k:
        raise ValidationError(f"assignment length {z.size} is not a multiple of k={enc.k}")
    if n_points is not None and z.size != n_points * enc.k:
        raise ValidationError(f"assignment length {z.size} != N*k = {n_points}*{enc.k}")
    if not np.all((z == 0) | (z == 1)):
        raise ValidationError("assignment entries must be 0 or 1")
    return z.reshape(-1, enc.k).astype(np.int64)


def scaled_weights(enc: PrecisionEncoding, z, n_points: int | None = None) -> np.ndarray:
    """Integer weights ``v_i = sum_j 2^(j-1) z[i, j]``, so ``alpha = v C / (2^k - 1)``."""
    groups = _bit_groups(enc, z, n_points)
    return groups @ (1 << np.arange(enc.k, dtype=np.int64))


def decode_alpha(enc: PrecisionEncoding, z, n_points: int | None = None) -> np.ndarray:
    v = scaled_weights(enc, z, n_points)
    alpha = (v * enc.c) / enc.levels
    # the full group maps to C exactly
    return np.where(v == enc.levels, enc.c, alpha)


def encode_alpha(enc: PrecisionEncoding, v) -> np.ndarray:
    """Bit vector for integer weights ``v`` (each in ``0 .. 2^k - 1``)."""
    v = np.asarray(v, dtype=np.int64)
    if np.any(v < 0) or np.any(v > enc.levels):
        raise ValidationError(f"integer weights must lie in [0, {enc.levels}]")
    return ((v[:, None] >> np.arange(enc.k)) & 1).astype(np.uint8).ravel()


def gram_matrix(x: np.ndarray) -> np.ndarray:
    return x @ x.T


@dataclass(frozen=True, eq=False)
class QuboSvmProblem:
    dataset: SvmDataset
    encoding: PrecisionEncoding
    lam: float
    qubo: QuboInstance


def build_qubo(data: SvmDataset, enc: PrecisionEncoding, lam: float) -> QuboSvmProblem:
    """QUBO whose energy is ``-1^T P z + z^T P^T (1/2 (yy^T * K) + lam yy^T) P z``."""
    if not lam > 0 or not np.isfinite(lam):
        raise ValidationError(f"lambda must be positive, got {lam!r}")
    if data.n < 2:
        raise ValidationError("need at least two data points")
    yy = np.outer(data.y, data.y).astype(np.float64)
    M = 0.5 * yy * gram_matrix(data.x) + lam * yy
    Q = np.kron(M, np.outer(enc.p, enc.p))
    Q[np.diag_indices_from(Q)] -= np.tile(enc.p, data.n)
    return QuboSvmProblem(data, enc, float(lam), QuboInstance.from_matrix(Q))


def constraint_residual(data: SvmDataset, enc: PrecisionEncoding, z) -> int:
    """``sum_i y_i v_i`` in exact integers; zero iff ``alpha^T y == 0``."""
    v = scaled_weights(enc, z, data.n)
    return int(sum(int(a) * int(b) for a, b in zip(data.y, v)))


@dataclass
class TrainedModel:
    w: np.ndarray
    b: float
    alpha: np.ndarray
    support_mask: np.ndarray
    lambda_used: float | None
    degenerate: bool
    c: float
    solver_evaluations: int = 0
    converged: bool = True
    assignment: np.ndarray | None = None


def recover_bias(data: SvmDataset, w: np.ndarray, alpha: np.ndarray, c: float) -> float:
    """Mean of ``w^T x_i - y_i`` over the strict-interior support vectors.

    Falls back to all support vectors when no ``0 < alpha_i < C`` exists, as
    always happens for one-bit weights.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    support = alpha > 0
    if not np.any(support):
        raise NoSupportVectors("all dual weights are zero")
    chosen = support & (alpha < c)
    if not np.any(chosen):
        chosen = support
    return float(np.mean(data.x[chosen] @ w - data.y[chosen]))


def model_from_alpha(data: SvmDataset, alpha: np.ndarray, c: float, **extra) -> TrainedModel:
    """Primal parameters from dual weights; all-zero weights give a degenerate model."""
    alpha = np.asarray(alpha, dtype=np.float64)
    support = alpha > 0
    if not np.any(support):
        return TrainedModel(
            w=np.zeros(data.d), b=float("nan"), alpha=alpha, support_mask=support,
            degenerate=True, c=c, **extra,
        )
    w = (alpha * data.y) @ data.x
    b = recover_bias(data, w, alpha, c)
    return TrainedModel(w=w, b=b, alpha=alpha, support_mask=support, degenerate=False, c=c, **extra)


def train(
    data: SvmDataset,
    enc: PrecisionEncoding,
    solver_cfg: TabuConfig = TabuConfig(),
    lambda0: float = DEFAULT_LAMBDA0,
    max_doublings: int = DEFAULT_MAX_DOUBLINGS,
    runs: int = 1,
    exact: bool = False,
    on_attempt=None,
) -> TrainedModel:
    """Solve the k-bit QUBO, doubling lambda until the solution balances the classes.

    ``exact=True`` swaps the tabu search for exhaustive enumeration.
    ``on_attempt(problem, report, residual)`` is called after every solve.
    """
    if max_doublings < 0:
        raise ValidationError("max_doublings must be >= 0")
    lam = float(lambda0)
    evaluations = 0
    residual = None
    for _ in range(max_doublings + 1):
        problem = build_qubo(data, enc, lam)
        report: SolverReport = (
            brute_force_solve(problem.qubo) if exact else multistart_best(problem.qubo, solver_cfg, runs)
        )
        evaluations += report.evaluations
        residual = constraint_residual(data, enc, report.best_assignment)
        if on_attempt is not None:
            on_attempt(problem, report, residual)
        if residual == 0:
            alpha = decode_alpha(enc, report.best_assignment, data.n)
            return model_from_alpha(
                data, alpha, enc.c,
                lambda_used=lam, solver_evaluations=evaluations, assignment=report.best_assignment,
            )
        lam *= 2.0
    raise ConstraintUnsatisfied(
        f"no balanced solution after {max_doublings} doublings (last lambda {lam / 2.0:g}, residual {residual})",
        residual=residual,
        lam=lam / 2.0,
    )


def decision_function(model: TrainedModel, x) -> np.ndarray:
    if model.degenerate:
        raise NoSupportVectors("degenerate model has no decision function")
    return np.asarray(x, dtype=np.float64) @ model.w - model.b


def predict(model: TrainedModel, x) -> int:
    """Label of one point: ``sign(w^T x - b)``, with 0 mapped to +1."""
    return 1 if float(decision_function(model, x)) >= 0 else -1


def predict_many(model: TrainedModel, x) -> np.ndarray:
    return np.where(decision_function(model, x) >= 0, 1, -1)
