"""Wrapping package.

This package provides the orientation-only training loop: the normal
alignment objective over training views, its finite-difference gradients,
per-Gaussian error propagation and flip-and-clone densification.
"""

from .densify import densify_flip, per_gaussian_error
from .optimizer import ViewCache, build_view, fd_normal_gradients, optimize_normals, view_terms
from .report import WrapReport

__all__ = [
    "WrapReport",
    "ViewCache",
    "build_view",
    "view_terms",
    "fd_normal_gradients",
    "optimize_normals",
    "per_gaussian_error",
    "densify_flip",
]
