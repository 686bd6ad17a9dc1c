"""Bound-preserving cut discontinuous Galerkin solvers in one dimension."""
from .errors import CutDGError
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["CutDGError", "KERNEL_BACKEND", "__version__"]
