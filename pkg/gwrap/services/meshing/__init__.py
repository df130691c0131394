"""Surface extraction package.

This package provides the incremental Delaunay tetrahedralization, pivot
generation, marching tetrahedra with isosurface refinement (MTet) and the
primal adaptive meshing pipeline (PAM), plus a watertightness check.
"""

from .delaunay import TetMesh, delaunay_tetrahedralize
from .pivots import PivotSet, generate_pivots
from .primal import (
    mesh_pam,
    pam_classify_tets,
    pam_close_pinches,
    pam_extract,
    pam_filter,
    pam_newton_project,
    pam_sample_faces,
)
from .tetra import IsoSurfaceMesh, marching_tetrahedra, mesh_mtet, refine_to_isosurface
from .watertight import WatertightReport, non_manifold_edges, watertight_check

__all__ = [
    "TetMesh",
    "PivotSet",
    "IsoSurfaceMesh",
    "WatertightReport",
    "delaunay_tetrahedralize",
    "generate_pivots",
    "marching_tetrahedra",
    "refine_to_isosurface",
    "mesh_mtet",
    "pam_sample_faces",
    "pam_newton_project",
    "pam_filter",
    "pam_classify_tets",
    "pam_close_pinches",
    "pam_extract",
    "mesh_pam",
    "watertight_check",
    "non_manifold_edges",
]
