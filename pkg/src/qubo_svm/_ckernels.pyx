# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for tabu search and exhaustive enumeration.

Both routines take the instance split into ``W`` (symmetric, zero diagonal,
``W[i, j]`` is the full pair coefficient) and ``diag``.  The local field
``g[i] = diag[i] + sum_j W[i, j] z[j]`` is kept up to date so a one-bit flip
costs O(n).  Operation order mirrors ``_pykernels`` exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs
from time import perf_counter

cnp.import_array()

ctypedef cnp.uint8_t u8


cdef inline double _build_state(const double[:, ::1] W, const double[::1] diag,
                                const u8[::1] start, u8[::1] z, double[::1] g) noexcept nogil:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i, j
    cdef double energy = 0.0
    for i in range(n):
        z[i] = 0
        g[i] = diag[i]
    for j in range(n):
        if start[j]:
            energy += g[j]
            z[j] = 1
            for i in range(n):
                g[i] += W[i, j]
    return energy


def tabu_search(const double[:, ::1] W, const double[::1] diag, const u8[:, ::1] starts,
                long iterations, long tenure, double time_limit=-1.0, bint record_trace=False):
    """Single-flip tabu search from each row of ``starts``.

    Returns ``(best_z, best_energy, evaluations, restarts_used, truncated, trace)``.
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t n_starts = starts.shape[0]
    cdef Py_ssize_t i, r, move
    cdef long it, t_eff
    cdef double energy, d, best_d, s
    cdef double best_energy = INFINITY
    cdef long long evaluations = 0
    cdef long long step = 0
    cdef Py_ssize_t restarts_used = 0
    cdef bint truncated = False
    cdef double t0 = perf_counter()

    z_arr = np.zeros(n, dtype=np.uint8)
    best_arr = np.zeros(n, dtype=np.uint8)
    g_arr = np.zeros(n, dtype=np.float64)
    tabu_arr = np.zeros(n, dtype=np.int64)
    cdef u8[::1] z = z_arr
    cdef u8[::1] best_z = best_arr
    cdef double[::1] g = g_arr
    cdef long long[::1] tabu_until = tabu_arr

    trace_arr = np.empty(n_starts * iterations if record_trace else 0, dtype=np.float64)
    cdef double[::1] trace = trace_arr

    # at least one move must stay admissible
    t_eff = tenure if tenure < n else n - 1

    for r in range(n_starts):
        if time_limit > 0 and perf_counter() - t0 > time_limit:
            truncated = True
            break
        energy = _build_state(W, diag, starts[r], z, g)
        if energy < best_energy:
            best_energy = energy
            best_z[:] = z
        for i in range(n):
            tabu_until[i] = 0
        for it in range(iterations):
            move = -1
            best_d = INFINITY
            for i in range(n):
                d = (1.0 - 2.0 * z[i]) * g[i]
                if tabu_until[i] > it and not (energy + d < best_energy):
                    continue
                if d < best_d:
                    best_d = d
                    move = i
            evaluations += n
            s = 1.0 - 2.0 * z[move]
            z[move] ^= 1
            energy += best_d
            for i in range(n):
                g[i] += s * W[i, move]
            tabu_until[move] = it + 1 + t_eff
            if energy < best_energy:
                best_energy = energy
                best_z[:] = z
            if record_trace:
                trace[step] = best_energy
            step += 1
            if time_limit > 0 and (it & 1023) == 1023 and perf_counter() - t0 > time_limit:
                truncated = True
                break
        restarts_used += 1
        if truncated:
            break

    return (best_arr, best_energy, int(evaluations), int(restarts_used), bool(truncated),
            trace_arr[:step] if record_trace else None)


cdef inline bint _lex_less(const u8[::1] a, const u8[::1] b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        if a[i] != b[i]:
            return a[i] < b[i]
    return False


def brute_force(const double[:, ::1] W, const double[::1] diag, double tie_tol=1e-10):
    """Gray-code enumeration of all assignments.

    Returns ``(best_z, best_energy, evaluations)``; near-ties within
    ``tie_tol * (1 + |best|)`` resolve to the lexicographically smallest
    assignment.
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i, b
    cdef unsigned long long t, total = (<unsigned long long>1) << n
    cdef double energy = 0.0
    cdef double best_energy = 0.0
    cdef double s, tol

    z_arr = np.zeros(n, dtype=np.uint8)
    best_arr = np.zeros(n, dtype=np.uint8)
    g_arr = np.array(diag, dtype=np.float64)
    cdef u8[::1] z = z_arr
    cdef u8[::1] best_z = best_arr
    cdef double[::1] g = g_arr

    with nogil:
        for t in range(1, total):
            b = 0
            while not ((t >> b) & 1):
                b += 1
            s = 1.0 - 2.0 * z[b]
            energy += s * g[b]
            z[b] ^= 1
            for i in range(n):
                g[i] += s * W[i, b]
            tol = tie_tol * (1.0 + fabs(best_energy))
            if energy < best_energy - tol:
                best_energy = energy
                best_z[:] = z
            elif energy <= best_energy + tol and _lex_less(z, best_z, n):
                if energy < best_energy:
                    best_energy = energy
                best_z[:] = z

    return best_arr, best_energy, int(total)
