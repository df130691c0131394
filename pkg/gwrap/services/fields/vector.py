"""Gaussian vector and normal fields.

The vector field is the gradient of log vacancy, a sum of per-Gaussian
log-attenuation gradients gated by each Gaussian's oriented half-space.
Queries look at the k nearest means only.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from gwrap.api.models import FieldsConfig
from gwrap.services.core import GaussianScene
from .attenuation import gaussian_log_gradients

logger = logging.getLogger(__name__)

DEFAULT_FIELDS = FieldsConfig()


def vector_field_terms(
    scene: GaussianScene, points: np.ndarray, k: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Vector field and contributing-Gaussian count for a batch of points.

    Args:
        scene: Gaussian scene
        points: (M, 3) query points
        k: Number of nearest Gaussians examined per point

    Returns:
        ((M, 3) vectors, (M,) support counts)
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = len(points)
    if len(scene) == 0 or m == 0:
        return np.zeros((m, 3)), np.zeros(m, dtype=np.int64)
    _, neighbors = scene.nearest(points, k)
    point_idx = np.repeat(np.arange(m), neighbors.shape[1])
    gauss_idx = neighbors.ravel()
    point_idx, gauss_idx, _, grads = gaussian_log_gradients(scene, points, point_idx, gauss_idx)
    offsets = points[point_idx] - scene.means[gauss_idx]
    on = np.einsum("ki,ki->k", scene.normals[gauss_idx], offsets) >= 0.0
    point_idx, gauss_idx, grads = point_idx[on], gauss_idx[on], grads[on]

    # sum per point in ascending Gaussian order so results do not depend on k-NN order
    order = np.lexsort((gauss_idx, point_idx))
    vectors = np.zeros((m, 3))
    np.add.at(vectors, point_idx[order], grads[order])
    counts = np.bincount(point_idx, minlength=m)
    return vectors, counts


def vector_field_batch(scene: GaussianScene, points: np.ndarray, k: int = DEFAULT_FIELDS.k_neighbors) -> np.ndarray:
    return vector_field_terms(scene, points, k)[0]


def vector_field(scene: GaussianScene, x, k: int = DEFAULT_FIELDS.k_neighbors) -> np.ndarray:
    """Sum of gated grad log(1 - G_i(x)) over the k nearest supported Gaussians."""
    return vector_field_batch(scene, np.asarray(x, dtype=float)[None, :], k)[0]


def normalize_field(vectors: np.ndarray, eps: float) -> np.ndarray:
    """Unit vectors, zero where the norm is below eps."""
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    return np.where(norms >= eps, vectors / np.where(norms > 0.0, norms, 1.0), 0.0)


def normal_field_batch(
    scene: GaussianScene,
    points: np.ndarray,
    k: int = DEFAULT_FIELDS.k_neighbors,
    config: Optional[FieldsConfig] = None,
) -> np.ndarray:
    config = config or DEFAULT_FIELDS
    return normalize_field(vector_field_batch(scene, points, k), config.vector_zero_eps)


def normal_field(
    scene: GaussianScene, x, k: int = DEFAULT_FIELDS.k_neighbors, config: Optional[FieldsConfig] = None
) -> np.ndarray:
    """V(x) / |V(x)|, or zero when |V(x)| < vector_zero_eps."""
    return normal_field_batch(scene, np.asarray(x, dtype=float)[None, :], k, config)[0]
