"""Oriented Gaussian primitives.

This module provides the per-Gaussian math every other service builds on:
covariance construction, evaluation, the log-attenuation gradient and the
sign/direction normal parameterization.
"""
import math
import logging
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

from gwrap.api.models import CoreConfig
from gwrap.services.errors import BadParams, ZeroNormal

logger = logging.getLogger(__name__)

ALPHA_MAX = CoreConfig().alpha_max
ZERO_NORMAL_EPS = 1e-9


def quaternion_to_rotation(q: Sequence[float]) -> np.ndarray:
    """Rotation matrix of a unit quaternion given as (w, x, y, z)."""
    w, x, y, z = (float(v) for v in q)
    return np.array([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])


def rotation_to_quaternion(rot: np.ndarray) -> Tuple[float, float, float, float]:
    """Unit quaternion (w, x, y, z) of a proper rotation matrix."""
    m = np.asarray(rot, dtype=float)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0.0:
        s = 2.0 * math.sqrt(trace + 1.0)
        q = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = ((m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = ((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = ((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s)
    norm = math.sqrt(sum(v * v for v in q))
    return tuple(v / norm for v in q)


def frame_from_normal(normal: Sequence[float]) -> np.ndarray:
    """Proper rotation whose third column is the given direction.

    Used to build Gaussians whose thin axis follows a surface normal.
    """
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(helper, n)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return np.column_stack([u, v, n])


@dataclass(frozen=True)
class OrientedGaussian:
    """One oriented primitive.

    Attributes:
        mean: Center, world units
        scales: Per-axis standard deviations, world units
        rotation: Unit quaternion (w, x, y, z)
        opacity: Peak value in [0, alpha_max]
        normal_sign: Unbounded sign parameter, mapped through tanh on read
        normal_dir: Nonzero direction parameter
        color: Flat color in [0, 1]^3
    """

    mean: Tuple[float, float, float]
    scales: Tuple[float, float, float]
    rotation: Tuple[float, float, float, float]
    opacity: float
    normal_sign: float
    normal_dir: Tuple[float, float, float]
    color: Tuple[float, float, float] = (0.5, 0.5, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))
        object.__setattr__(self, "scales", tuple(float(v) for v in self.scales))
        object.__setattr__(self, "rotation", tuple(float(v) for v in self.rotation))
        object.__setattr__(self, "normal_dir", tuple(float(v) for v in self.normal_dir))
        object.__setattr__(self, "color", tuple(float(v) for v in self.color))
        object.__setattr__(self, "opacity", float(self.opacity))
        object.__setattr__(self, "normal_sign", float(self.normal_sign))

        if len(self.mean) != 3 or len(self.scales) != 3 or len(self.normal_dir) != 3:
            raise BadParams("mean, scales and normal_dir must be 3-vectors")
        if len(self.rotation) != 4:
            raise BadParams("rotation must be a (w, x, y, z) quaternion")
        if any(s <= 0.0 for s in self.scales):
            raise BadParams(f"scales must be positive, got {self.scales}")
        if abs(math.sqrt(sum(q * q for q in self.rotation)) - 1.0) > 1e-9:
            raise BadParams(f"rotation quaternion must have unit norm, got {self.rotation}")
        if not 0.0 <= self.opacity < 1.0:
            raise BadParams(f"opacity must lie in [0, 1), got {self.opacity}")
        if sum(d * d for d in self.normal_dir) <= 0.0:
            raise BadParams("normal_dir must be nonzero")
        if any(c < 0.0 or c > 1.0 for c in self.color):
            raise BadParams(f"color must lie in [0, 1]^3, got {self.color}")

    @classmethod
    def create(
        cls,
        mean: Sequence[float],
        scales: Sequence[float],
        rotation: np.ndarray = None,
        opacity: float = 0.9,
        normal: Sequence[float] = (0.0, 0.0, 1.0),
        normal_sign: float = 5.0,
        color: Sequence[float] = (0.5, 0.5, 0.5),
        alpha_max: float = ALPHA_MAX,
    ) -> "OrientedGaussian":
        """Build a Gaussian from a rotation matrix and a normal direction.

        Opacity is clamped to alpha_max.
        """
        quat = (1.0, 0.0, 0.0, 0.0) if rotation is None else rotation_to_quaternion(rotation)
        return cls(
            mean=tuple(mean),
            scales=tuple(scales),
            rotation=quat,
            opacity=min(float(opacity), alpha_max),
            normal_sign=normal_sign,
            normal_dir=tuple(normal),
            color=tuple(color),
        )

    @property
    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quaternion_to_rotation(self.rotation)

    def with_normal(self, normal_sign: float, normal_dir: Sequence[float]) -> "OrientedGaussian":
        return replace(self, normal_sign=float(normal_sign), normal_dir=tuple(float(v) for v in normal_dir))

    def flipped(self) -> "OrientedGaussian":
        """Copy with the normal sign negated."""
        return replace(self, normal_sign=-self.normal_sign)


def covariance_of(g: OrientedGaussian) -> Tuple[np.ndarray, np.ndarray]:
    """Covariance and precision of a Gaussian.

    Both come from the factored form R diag(s^2) R^T; the precision uses
    diag(s^-2), never a generic inverse.

    Returns:
        (Sigma, Sigma^-1), each symmetric 3x3
    """
    rot = g.rotation_matrix
    scales = np.asarray(g.scales, dtype=float)
    cov = (rot * scales ** 2) @ rot.T
    precision = (rot * scales ** -2) @ rot.T
    return 0.5 * (cov + cov.T), 0.5 * (precision + precision.T)


def _mahalanobis_sq(g: OrientedGaussian, x: np.ndarray) -> Tuple[float, np.ndarray]:
    _, precision = covariance_of(g)
    d = np.asarray(x, dtype=float) - g.mean_array
    pd = precision @ d
    return float(d @ pd), pd


def eval_gaussian(g: OrientedGaussian, x: Sequence[float]) -> float:
    """alpha * exp(-0.5 (x - mu)^T Sigma^-1 (x - mu)), without support cutoff."""
    q, _ = _mahalanobis_sq(g, x)
    return g.opacity * math.exp(-0.5 * q)


def grad_log_one_minus_g(g: OrientedGaussian, x: Sequence[float]) -> np.ndarray:
    """Gradient of log(1 - G) at x.

    Equals G/(1-G) Sigma^-1 (x - mu); it points away from the center
    wherever G > 0.
    """
    q, pd = _mahalanobis_sq(g, x)
    value = g.opacity * math.exp(-0.5 * q)
    return (value / (1.0 - value)) * pd


def oriented_normal(g: OrientedGaussian) -> np.ndarray:
    """tanh(normal_sign) * normal_dir / |normal_dir|; odd in normal_sign."""
    d = np.asarray(g.normal_dir, dtype=float)
    return math.tanh(g.normal_sign) * d / np.linalg.norm(d)


def normal_scale_along(g: OrientedGaussian) -> float:
    """Ellipsoid scale along the unit oriented normal, |diag(s) R^T n|."""
    n = oriented_normal(g)
    norm = float(np.linalg.norm(n))
    if norm < ZERO_NORMAL_EPS:
        raise ZeroNormal(f"oriented normal has norm {norm:.3g}")
    local = g.rotation_matrix.T @ (n / norm)
    return float(np.linalg.norm(np.asarray(g.scales) * local))


def oriented_normals(normal_sign: np.ndarray, normal_dir: np.ndarray) -> np.ndarray:
    """Vectorized oriented normals for (N,) signs and (N, 3) directions."""
    d = np.asarray(normal_dir, dtype=float)
    norms = np.linalg.norm(d, axis=-1, keepdims=True)
    return np.tanh(np.asarray(normal_sign, dtype=float))[..., None] * d / norms
