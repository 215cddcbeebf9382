"""Full-precision linear SVM baseline: two-variable SMO on the dual."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import SvmDataset
from .encoding import TrainedModel, gram_matrix, model_from_alpha
from .errors import ValidationError

TAU = 1e-12


@dataclass(frozen=True)
class SmoConfig:
    """``max_passes`` counts sweeps of N pair updates; ``None`` means 10 N sweeps."""

    tolerance: float = 1e-3
    max_passes: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.max_passes is not None and self.max_passes < 1:
            raise ValidationError("max_passes must be >= 1")


def dual_objective(data: SvmDataset, alpha) -> float:
    """``1^T alpha - 1/2 alpha^T (yy^T * K) alpha``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (data.n,):
        raise ValidationError(f"alpha has length {alpha.size}, dataset has N={data.n}")
    v = (alpha * data.y) @ data.x
    return float(alpha.sum() - 0.5 * (v @ v))


def _clip(value: float, c: float) -> float:
    # rounding residue next to a bound is snapped onto it
    eps = 1e-12 * c
    return 0.0 if value <= eps else (c if value >= c - eps else value)


def smo_train(data: SvmDataset, c: float, cfg: SmoConfig = SmoConfig(), trace: list | None = None) -> TrainedModel:
    """Maximise the dual by repeated two-variable updates.

    The first index is the point with the largest KKT violation, the second
    the partner maximising ``|E_i - E_j|``.  Stops when the largest violation
    is below ``cfg.tolerance``; otherwise returns the last iterate with
    ``converged=False``.  If ``trace`` is a list the dual objective is
    appended after every update.
    """
    if not c > 0:
        raise ValidationError(f"C must be positive, got {c!r}")
    n = data.n
    y = data.y.astype(np.float64)
    K = gram_matrix(data.x)
    alpha = np.zeros(n)
    u = np.zeros(n)  # w^T x_i
    # ties in the arg-max resolve in a seeded random order
    order = np.random.default_rng(cfg.rng_seed).permutation(n)
    y_o, K_diag = y[order], np.diag(K)
    max_iter = (cfg.max_passes if cfg.max_passes is not None else 10 * n) * n

    converged = False
    updates = 0
    for _ in range(max_iter):
        E = u - y
        a_o = alpha[order]
        up = ((y_o > 0) & (a_o < c)) | ((y_o < 0) & (a_o > 0))
        low = ((y_o > 0) & (a_o > 0)) | ((y_o < 0) & (a_o < c))
        if not up.any() or not low.any():
            converged = True
            break
        E_o = E[order]
        i = order[np.argmin(np.where(up, E_o, np.inf))]
        j = order[np.argmax(np.where(low, E_o, -np.inf))]
        if E[j] - E[i] < cfg.tolerance:
            converged = True
            break

        yi, yj = y[i], y[j]
        ai, aj = alpha[i], alpha[j]
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(c, c + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - c), min(c, ai + aj)
        eta = max(K_diag[i] + K_diag[j] - 2.0 * K[i, j], TAU)
        aj_new = _clip(min(max(aj + yj * (E[i] - E[j]) / eta, lo), hi), c)
        ai_new = _clip(ai + yi * yj * (aj - aj_new), c)
        di, dj = ai_new - ai, aj_new - aj
        if di == 0.0 and dj == 0.0:
            break
        alpha[i], alpha[j] = ai_new, aj_new
        u += (di * yi) * K[:, i] + (dj * yj) * K[:, j]
        updates += 1
        if trace is not None:
            trace.append(dual_objective(data, alpha))

    return model_from_alpha(
        data, alpha, float(c), lambda_used=None, converged=converged, solver_evaluations=updates
    )
