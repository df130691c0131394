"""Mesh evaluation package.

This package provides point clouds drawn from meshes under the legacy,
uniform-sampling and virtual-scan protocols, Chamfer and F1 metrics, and the
tessellation-bias experiment.
"""

from .bias import bias_experiment
from .bvh import TriangleBVH, virtual_scan
from .metrics import chamfer, default_tau, evaluate_mesh, f1_at, nearest_distances, protocol_cloud
from .pointcloud import PointCloud, legacy_point_cloud, uniform_sample

__all__ = [
    "PointCloud",
    "TriangleBVH",
    "uniform_sample",
    "legacy_point_cloud",
    "virtual_scan",
    "chamfer",
    "nearest_distances",
    "f1_at",
    "default_tau",
    "protocol_cloud",
    "evaluate_mesh",
    "bias_experiment",
]
