"""Backend dispatch for the hot inner-loop kernels.

The package ships two interchangeable kernel implementations:

* ``lungseg._kernels_numba``: ``@njit``-compiled loops (the default when
  numba is importable).
* ``lungseg._kernels_numpy``: pure-numpy fallback with identical
  semantics.

The active backend is fixed once at import time from the
``LUNGSEG_BACKEND`` environment variable: ``numba`` forces the compiled
path and fails loudly when numba is unavailable, ``numpy`` forces the
fallback, unset prefers numba.
"""

from __future__ import annotations

import os

from lungseg import _kernels_numpy

try:
    from lungseg import _kernels_numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    _kernels_numba = None
    _HAVE_NUMBA = False


def available_backends() -> dict:
    """Name -> kernel module for every importable backend."""
    out = {"numpy": _kernels_numpy}
    if _HAVE_NUMBA:
        out["numba"] = _kernels_numba
    return out


def _choose():
    forced = os.environ.get("LUNGSEG_BACKEND", "").strip().lower()
    if forced == "numpy":
        return "numpy", _kernels_numpy
    if forced == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError(
                "LUNGSEG_BACKEND=numba but numba is not importable"
            )
        return "numba", _kernels_numba
    if forced:
        raise RuntimeError(f"unknown LUNGSEG_BACKEND value: {forced!r}")
    if _HAVE_NUMBA:
        return "numba", _kernels_numba
    return "numpy", _kernels_numpy


_active_name, _active = _choose()


def active():
    """The kernel module currently in use."""
    return _active


def backend_name() -> str:
    return _active_name
