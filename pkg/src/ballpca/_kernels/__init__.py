"""Kernel backend selection.

The compiled Cython extension is preferred when importable; the pure-numpy
fallback is used otherwise. ``BALLPCA_DISABLE_EXT=1`` forces the fallback
(useful for benchmarking and debugging).
"""

import os

from . import _numpy

if os.environ.get("BALLPCA_DISABLE_EXT", "") == "1":
    _impl = _numpy
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _numpy

legendre_table = _impl.legendre_table
trilinear_interpolate = _impl.trilinear_interpolate


def backend():
    """Name of the active kernel backend: "compiled" or "numpy"."""
    return _impl.BACKEND


def available_backends():
    """All importable backend modules, keyed by name (for benchmarks)."""
    found = {"numpy": _numpy}
    try:
        from . import _core

        found["compiled"] = _core
    except ImportError:
        pass
    return found
