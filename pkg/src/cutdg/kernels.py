"""Kernel backend selection.

The compiled extension is used when it imports; setting CUTDG_PURE_PYTHON=1
forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CUTDG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]

        _impl = _compiled
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

poly_extrema = _impl.poly_extrema
scalar_theta = _impl.scalar_theta
positivity_thetas = _impl.positivity_thetas
minmod3 = _impl.minmod3

__all__ = ["BACKEND", "poly_extrema", "scalar_theta", "positivity_thetas", "minmod3"]
