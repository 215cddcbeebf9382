"""QUBO instances, energies, Ising conversion and an exhaustive solver.

An instance stores the upper-triangular fold of a symmetric matrix ``Q``:
``coefficients[i, i] = Q[i, i]`` and ``coefficients[i, j] = Q[i, j] + Q[j, i]``
for ``i < j``.  With that layout ``z @ coefficients @ z == z @ Q @ z``.
"""

from __future__ import annotations

import io
import os
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO

import numpy as np

from . import kernels
from .errors import ProblemTooLarge, ValidationError

BRUTE_FORCE_LIMIT = 24


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """Immutable QUBO instance over ``n`` binary variables."""

    n: int
    coefficients: np.ndarray

    def __post_init__(self):
        U = np.array(self.coefficients, dtype=np.float64)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValidationError(f"coefficient table must be square, got shape {U.shape}")
        if self.n < 1 or U.shape[0] != self.n:
            raise ValidationError(f"n={self.n} does not match table of size {U.shape[0]}")
        if not np.all(np.isfinite(U)):
            raise ValidationError("coefficients must be finite")
        if np.any(np.tril(U, -1) != 0):
            raise ValidationError("coefficient table must be upper-triangular")
        U.setflags(write=False)
        object.__setattr__(self, "coefficients", U)

    @classmethod
    def from_matrix(cls, Q) -> "QuboInstance":
        """Fold a square (usually symmetric) matrix into upper-triangular form."""
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValidationError(f"matrix must be square, got shape {Q.shape}")
        U = np.triu(Q + Q.T, 1) + np.diag(np.diag(Q))
        return cls(Q.shape[0], U)

    @classmethod
    def from_upper(cls, U) -> "QuboInstance":
        U = np.asarray(U, dtype=np.float64)
        return cls(U.shape[0], U)

    @cached_property
    def diag(self) -> np.ndarray:
        d = np.ascontiguousarray(np.diag(self.coefficients))
        d.setflags(write=False)
        return d

    @cached_property
    def pair_matrix(self) -> np.ndarray:
        """Symmetric matrix of pair coefficients with a zero diagonal."""
        off = np.triu(self.coefficients, 1)
        W = np.ascontiguousarray(off + off.T)
        W.setflags(write=False)
        return W

    def symmetric(self) -> np.ndarray:
        """The symmetric ``Q`` this instance represents."""
        off = np.triu(self.coefficients, 1) / 2.0
        return off + off.T + np.diag(self.diag)


@dataclass
class SolverReport:
    best_assignment: np.ndarray
    best_energy: float
    evaluations: int
    restarts_used: int
    wall_time: float
    truncated: bool = False
    trace: np.ndarray | None = field(default=None, repr=False)


def _as_bits(z, n: int) -> np.ndarray:
    z = np.asarray(z)
    if z.ndim != 1 or z.shape[0] != n:
        raise ValidationError(f"assignment has length {z.size}, instance has n={n}")
    if not np.all((z == 0) | (z == 1)):
        raise ValidationError("assignment entries must be 0 or 1")
    return z.astype(np.float64)


def energy(q: QuboInstance, z) -> float:
    """``z^T Q z`` for a binary assignment."""
    zf = _as_bits(z, q.n)
    return float(zf @ (q.coefficients @ zf))


def flip_delta(q: QuboInstance, z, i: int) -> float:
    """Energy change caused by flipping bit ``i`` of ``z``."""
    zf = _as_bits(z, q.n)
    if not 0 <= i < q.n:
        raise IndexError(f"bit index {i} out of range for n={q.n}")
    field_i = q.diag[i] + float(q.pair_matrix[i] @ zf)
    return (1.0 - 2.0 * zf[i]) * field_i


@dataclass(frozen=True, eq=False)
class IsingModel:
    """``E(s) = h @ s + sum_{i<j} J[i, j] s_i s_j`` over spins in {+1, -1}."""

    h: np.ndarray
    J: np.ndarray


def ising_energy(model: IsingModel, spins) -> float:
    s = np.asarray(spins, dtype=np.float64)
    return float(model.h @ s + s @ (model.J @ s))


def to_ising(q: QuboInstance) -> tuple[IsingModel, float]:
    """Rewrite ``q`` over spins ``s = 1 - 2 z``.

    Returns ``(model, offset)`` with ``ising_energy(model, s) + offset == energy(q, z)``.
    """
    off = np.triu(q.coefficients, 1)
    J = off / 4.0
    h = -q.diag / 2.0 - (off.sum(axis=1) + off.sum(axis=0)) / 4.0
    offset = float(q.diag.sum() / 2.0 + off.sum() / 4.0)
    return IsingModel(h=h, J=J), offset


def from_ising(model: IsingModel) -> tuple[QuboInstance, float]:
    """Inverse of :func:`to_ising`: returns ``(q, offset)`` with
    ``energy(q, z) + offset == ising_energy(model, 1 - 2 z)``."""
    J = np.triu(np.asarray(model.J, dtype=np.float64), 1)
    h = np.asarray(model.h, dtype=np.float64)
    diag = -2.0 * h - 2.0 * (J.sum(axis=1) + J.sum(axis=0))
    U = 4.0 * J + np.diag(diag)
    return QuboInstance.from_upper(U), float(h.sum() + J.sum())


def brute_force_solve(q: QuboInstance, limit: int = BRUTE_FORCE_LIMIT) -> SolverReport:
    """Exact minimiser by enumeration.

    Ties resolve to the lexicographically smallest bit sequence.
    """
    if q.n > limit:
        raise ProblemTooLarge(f"brute force refuses n={q.n}; the limit is {limit}")
    t0 = time.perf_counter()
    z, _, evals = kernels.brute_force(q.pair_matrix, q.diag)
    z = np.asarray(z, dtype=np.uint8)
    return SolverReport(
        best_assignment=z,
        best_energy=energy(q, z),
        evaluations=int(evals),
        restarts_used=1,
        wall_time=time.perf_counter() - t0,
    )


def write_qubo(q: QuboInstance, dest: str | os.PathLike | IO[str], comment: str | None = None) -> None:
    """Write the text format: ``n <count>`` then ``i j value`` per nonzero (i <= j)."""
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write(f"n {q.n}\n")
    rows, cols = np.nonzero(q.coefficients)
    for i, j in zip(rows, cols):
        buf.write(f"{i} {j} {float(q.coefficients[i, j])!r}\n")
    if hasattr(dest, "write"):
        dest.write(buf.getvalue())
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())


def read_qubo(src: str | os.PathLike | IO[str]) -> QuboInstance:
    if hasattr(src, "read"):
        text = src.read()
    else:
        with open(src, encoding="utf-8") as fh:
            text = fh.read()
    n = None
    U = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ValidationError(f"line {lineno}: expected header 'n <count>'")
            try:
                n = int(parts[1])
            except ValueError:
                raise ValidationError(f"line {lineno}: bad variable count {parts[1]!r}") from None
            if n < 1:
                raise ValidationError(f"line {lineno}: n must be positive")
            U = np.zeros((n, n))
            continue
        if len(parts) != 3:
            raise ValidationError(f"line {lineno}: expected 'i j value'")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ValidationError(f"line {lineno}: cannot parse {line!r}") from None
        if not (0 <= i <= j < n):
            raise ValidationError(f"line {lineno}: need 0 <= i <= j < {n}, got {i} {j}")
        U[i, j] += v
    if n is None:
        raise ValidationError("missing 'n <count>' header")
    return QuboInstance(n, U)
