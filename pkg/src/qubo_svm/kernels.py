"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy fallback
is used.  Set ``QUBO_SVM_KERNELS=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("QUBO_SVM_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ("cython", "python") or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def tabu_search(*args, **kwargs):
    return _impl.tabu_search(*args, **kwargs)


def brute_force(*args, **kwargs):
    return _impl.brute_force(*args, **kwargs)
