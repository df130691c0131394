"""Core domain package.

This package provides the oriented Gaussian, camera, ray, scene and mesh
types together with the per-Gaussian math shared by every other service.
"""

from .camera import PinholeCamera, Ray
from .gaussians import (
    OrientedGaussian,
    covariance_of,
    eval_gaussian,
    frame_from_normal,
    grad_log_one_minus_g,
    normal_scale_along,
    oriented_normal,
    oriented_normals,
    quaternion_to_rotation,
    rotation_to_quaternion,
)
from .kernel import RayPairs, gaussian_values, max_contribution_t_batch, ray_gaussian_pairs
from .mesh import TriangleMesh
from .scene import GaussianScene

__all__ = [
    "OrientedGaussian",
    "PinholeCamera",
    "Ray",
    "GaussianScene",
    "TriangleMesh",
    "RayPairs",
    "covariance_of",
    "eval_gaussian",
    "grad_log_one_minus_g",
    "oriented_normal",
    "oriented_normals",
    "normal_scale_along",
    "quaternion_to_rotation",
    "rotation_to_quaternion",
    "frame_from_normal",
    "gaussian_values",
    "max_contribution_t_batch",
    "ray_gaussian_pairs",
]
