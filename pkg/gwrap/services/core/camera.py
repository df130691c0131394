"""Pinhole cameras and rays.

Camera space follows the usual vision convention: +z looks forward, +x
right, +y down. Pixel (u, v) is sampled at its center (u + 0.5, v + 0.5).
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from gwrap.services.errors import BadParams

logger = logging.getLogger(__name__)

POSE_ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True)
class Ray:
    origin: Tuple[float, float, float]
    direction: Tuple[float, float, float]

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        norm = float(np.linalg.norm(d))
        if norm <= 0.0:
            raise BadParams("ray direction must be nonzero")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "direction", tuple(float(v) for v in d / norm))

    @classmethod
    def through(cls, origin: Sequence[float], point: Sequence[float]) -> "Ray":
        """Ray from origin toward point."""
        o = np.asarray(origin, dtype=float)
        return cls(tuple(o), tuple(np.asarray(point, dtype=float) - o))

    def at(self, t: float) -> np.ndarray:
        return np.asarray(self.origin) + t * np.asarray(self.direction)


@dataclass(frozen=True)
class PinholeCamera:
    """Pinhole camera with a rigid world_from_camera pose.

    Attributes:
        fx, fy: Focal lengths in pixels
        cx, cy: Principal point in pixels
        width, height: Image size
        world_from_camera: 3x4 [R | t] as a nested tuple
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    world_from_camera: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        pose = np.asarray(self.world_from_camera, dtype=float).reshape(3, 4)
        object.__setattr__(self, "world_from_camera", tuple(tuple(row) for row in pose))
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise BadParams(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if self.width < 1 or self.height < 1:
            raise BadParams(f"image size must be positive, got {self.width}x{self.height}")
        if not (0.0 <= self.cx <= self.width and 0.0 <= self.cy <= self.height):
            raise BadParams(f"principal point ({self.cx}, {self.cy}) lies outside the image")
        rot = pose[:, :3]
        if np.abs(rot.T @ rot - np.eye(3)).max() > POSE_ORTHONORMAL_TOL or np.linalg.det(rot) < 0.0:
            raise BadParams("camera rotation must be orthonormal with det +1")

    @classmethod
    def look_at(
        cls,
        eye: Sequence[float],
        target: Sequence[float],
        up: Sequence[float] = (0.0, 0.0, 1.0),
        width: int = 64,
        height: int = 64,
        fov_degrees: float = 50.0,
    ) -> "PinholeCamera":
        """Camera at eye looking at target with a symmetric field of view."""
        eye = np.asarray(eye, dtype=float)
        forward = np.asarray(target, dtype=float) - eye
        forward /= np.linalg.norm(forward)
        up = np.asarray(up, dtype=float)
        if abs(float(forward @ up)) > 0.999 * np.linalg.norm(up):
            up = np.array([1.0, 0.0, 0.0]) if abs(forward[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        right = np.cross(forward, up)
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        rot = np.column_stack([right, down, forward])
        focal = 0.5 * width / np.tan(0.5 * np.radians(fov_degrees))
        pose = np.column_stack([rot, eye])
        return cls(
            fx=float(focal), fy=float(focal), cx=0.5 * width, cy=0.5 * height,
            width=int(width), height=int(height), world_from_camera=pose,
        )

    @property
    def pose(self) -> np.ndarray:
        return np.asarray(self.world_from_camera, dtype=float)

    @property
    def rotation(self) -> np.ndarray:
        return self.pose[:, :3]

    @property
    def center(self) -> np.ndarray:
        return self.pose[:, 3].copy()

    def pixel_directions(self) -> np.ndarray:
        """Unit camera-space directions for every pixel, shape (H, W, 3)."""
        u = (np.arange(self.width) + 0.5 - self.cx) / self.fx
        v = (np.arange(self.height) + 0.5 - self.cy) / self.fy
        uu, vv = np.meshgrid(u, v)
        dirs = np.stack([uu, vv, np.ones_like(uu)], axis=-1)
        return dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)

    def pixel_rays(self) -> Tuple[np.ndarray, np.ndarray]:
        """World-space ray origins and unit directions, each (H*W, 3), row-major."""
        dirs = self.pixel_directions().reshape(-1, 3) @ self.rotation.T
        origins = np.broadcast_to(self.center, dirs.shape).copy()
        return origins, dirs
