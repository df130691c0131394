"""Gaussian scene container.

A GaussianScene is built once from a list of Gaussians and cameras and is
read-only afterwards. Alongside the ordered records it keeps packed numpy
arrays of every per-Gaussian quantity the batched kernels need and a k-d
tree over the means.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from gwrap.api.models import CoreConfig
from gwrap.services.errors import BadParams, NoCameras
from .camera import PinholeCamera
from .gaussians import OrientedGaussian, oriented_normals, quaternion_to_rotation

logger = logging.getLogger(__name__)

BBOX_PAD_SCALES = 3.0


class GaussianScene:
    """Ordered Gaussians, training cameras and their spatial index.

    Attributes:
        gaussians: Tuple of OrientedGaussian, order is significant
        cameras: Tuple of PinholeCamera used for vacancy queries
        config: Core constants (alpha_max, support_sigma)
        spatial_index: cKDTree over means, None for an empty scene
        bbox: (2, 3) array of min/max means padded by 3x the max scale
    """

    def __init__(
        self,
        gaussians: Sequence[OrientedGaussian],
        cameras: Sequence[PinholeCamera] = (),
        config: Optional[CoreConfig] = None,
    ):
        self.gaussians = tuple(gaussians)
        self.cameras = tuple(cameras)
        self.config = config or CoreConfig()

        for index, g in enumerate(self.gaussians):
            if g.opacity > self.config.alpha_max:
                raise BadParams(
                    f"Gaussian {index} opacity {g.opacity} exceeds alpha_max {self.config.alpha_max}",
                    index=index,
                )

        n = len(self.gaussians)
        self.means = np.array([g.mean for g in self.gaussians], dtype=float).reshape(n, 3)
        self.scales = np.array([g.scales for g in self.gaussians], dtype=float).reshape(n, 3)
        self.opacities = np.array([g.opacity for g in self.gaussians], dtype=float)
        self.colors = np.array([g.color for g in self.gaussians], dtype=float).reshape(n, 3)
        self.normal_signs = np.array([g.normal_sign for g in self.gaussians], dtype=float)
        self.normal_dirs = np.array([g.normal_dir for g in self.gaussians], dtype=float).reshape(n, 3)
        self.rotations = np.array(
            [quaternion_to_rotation(g.rotation) for g in self.gaussians], dtype=float
        ).reshape(n, 3, 3)

        # R diag(s^2) R^T and R diag(s^-2) R^T, batched
        self.covariances = np.einsum("nij,nj,nkj->nik", self.rotations, self.scales ** 2, self.rotations)
        self.precisions = np.einsum("nij,nj,nkj->nik", self.rotations, self.scales ** -2, self.rotations)
        self.normals = oriented_normals(self.normal_signs, self.normal_dirs) if n else np.zeros((0, 3))
        self.max_scales = self.scales.max(axis=1) if n else np.zeros(0)
        self.support_radii = self.config.support_sigma * self.max_scales

        self.spatial_index = cKDTree(self.means) if n else None
        if n:
            pad = BBOX_PAD_SCALES * float(self.max_scales.max())
            self.bbox = np.stack([self.means.min(axis=0) - pad, self.means.max(axis=0) + pad])
        else:
            self.bbox = np.zeros((2, 3))

    def __len__(self) -> int:
        return len(self.gaussians)

    def __repr__(self) -> str:
        return f"GaussianScene(gaussians={len(self.gaussians)}, cameras={len(self.cameras)})"

    @property
    def support_sigma(self) -> float:
        return self.config.support_sigma

    @property
    def diagonal(self) -> float:
        """Length of the bounding-box diagonal."""
        return float(np.linalg.norm(self.bbox[1] - self.bbox[0]))

    @property
    def camera_centers(self) -> np.ndarray:
        return np.array([c.center for c in self.cameras], dtype=float).reshape(-1, 3)

    def require_cameras(self) -> None:
        if not self.cameras:
            raise NoCameras("scene has no cameras for vacancy queries")

    def nearest(self, points: np.ndarray, k: int):
        """k nearest Gaussian means per point.

        Returns:
            (distances, indices), each (M, min(k, N)); empty arrays for an empty scene
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = min(int(k), len(self.gaussians))
        if k == 0:
            empty = np.zeros((len(points), 0))
            return empty, empty.astype(int)
        dist, idx = self.spatial_index.query(points, k=k)
        return dist.reshape(len(points), k), idx.reshape(len(points), k)

    def with_gaussians(self, gaussians: Sequence[OrientedGaussian]) -> "GaussianScene":
        """New scene with the same cameras and config."""
        return GaussianScene(gaussians, self.cameras, self.config)

    def with_normals(self, normal_signs: np.ndarray, normal_dirs: np.ndarray) -> "GaussianScene":
        """New scene whose Gaussians carry the given sign/direction parameters."""
        updated: List[OrientedGaussian] = [
            g.with_normal(s, d) for g, s, d in zip(self.gaussians, normal_signs, normal_dirs)
        ]
        return self.with_gaussians(updated)
