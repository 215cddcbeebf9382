"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels.pyx``.

The tabu loop performs the same floating-point operations in the same order
as the compiled version, so both backends return identical reports.
"""

from __future__ import annotations

from time import perf_counter

import numpy as np


def _build_state(W, diag, start):
    n = diag.shape[0]
    z = np.zeros(n, dtype=np.uint8)
    g = diag.astype(np.float64, copy=True)
    energy = 0.0
    for j in np.flatnonzero(start):
        energy += g[j]
        z[j] = 1
        g += W[:, j]
    return energy, z, g


def tabu_search(W, diag, starts, iterations, tenure, time_limit=-1.0, record_trace=False):
    n = diag.shape[0]
    best_energy = np.inf
    best_z = np.zeros(n, dtype=np.uint8)
    evaluations = 0
    restarts_used = 0
    truncated = False
    trace = []
    t0 = perf_counter()
    t_eff = tenure if tenure < n else n - 1
    columns = [np.ascontiguousarray(W[:, i]) for i in range(n)]

    for start in starts:
        if time_limit > 0 and perf_counter() - t0 > time_limit:
            truncated = True
            break
        energy, z, g = _build_state(W, diag, start)
        energy = float(energy)
        if energy < best_energy:
            best_energy = energy
            best_z = z.copy()
        tabu_until = np.zeros(n, dtype=np.int64)
        for it in range(iterations):
            d = (1.0 - 2.0 * z) * g
            admissible = (tabu_until <= it) | (energy + d < best_energy)
            move = int(np.argmin(np.where(admissible, d, np.inf)))
            evaluations += n
            s = 1.0 - 2.0 * z[move]
            z[move] ^= 1
            energy += float(d[move])
            g += s * columns[move]
            tabu_until[move] = it + 1 + t_eff
            if energy < best_energy:
                best_energy = energy
                best_z = z.copy()
            if record_trace:
                trace.append(best_energy)
            if time_limit > 0 and (it & 1023) == 1023 and perf_counter() - t0 > time_limit:
                truncated = True
                break
        restarts_used += 1
        if truncated:
            break

    return (best_z, float(best_energy), evaluations, restarts_used, truncated,
            np.asarray(trace, dtype=np.float64) if record_trace else None)


def brute_force(W, diag, tie_tol=1e-10, chunk_bits=14):
    """Enumerate in lexicographic order (bit 0 most significant), chunked."""
    n = diag.shape[0]
    upper = np.triu(W, 1) + np.diag(diag)
    total = 1 << n
    low = min(n, chunk_bits)
    high = n - low
    # rows of the low block cover bits high..n-1
    low_bits = ((np.arange(1 << low)[:, None] >> np.arange(low - 1, -1, -1)) & 1).astype(np.float64)

    best_energy = None
    best_index = -1
    for prefix in range(1 << high):
        head = np.array([(prefix >> (high - 1 - i)) & 1 for i in range(high)], dtype=np.float64)
        Z = np.hstack([np.broadcast_to(head, (low_bits.shape[0], high)), low_bits])
        E = np.einsum("ij,ij->i", Z @ upper, Z)
        m = float(E.min())
        if best_energy is None or m < best_energy - tie_tol * (1.0 + abs(best_energy)):
            best_energy = m
            tol = tie_tol * (1.0 + abs(m))
            best_index = (prefix << low) + int(np.flatnonzero(E <= m + tol)[0])
        elif m < best_energy:
            best_energy = m
    best_z = np.array([(best_index >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.uint8)
    return best_z, float(best_energy), total
