"""Transmittance and attenuation along rays.

Transmittance is the product over Gaussians of 1 - G evaluated at the
clamped point of maximum contribution; attenuation is the matching
extinction coefficient, in its plain (one-sided) and oriented (reciprocal)
forms.
"""
import logging
from typing import Tuple

import numpy as np

from gwrap.services.core import GaussianScene, OrientedGaussian, Ray, covariance_of, ray_gaussian_pairs
from gwrap.services.core.kernel import max_contribution_t_batch

logger = logging.getLogger(__name__)


def max_contribution_t(ray: Ray, g: OrientedGaussian) -> float:
    """Clamped argmax over t >= 0 of G(o + t w)."""
    _, precision = covariance_of(g)
    t = max_contribution_t_batch(
        np.asarray([ray.origin]), np.asarray([ray.direction]), g.mean_array[None, :], precision[None]
    )
    return float(t[0])


def transmittance_batch(
    scene: GaussianScene, origins: np.ndarray, directions: np.ndarray, t: np.ndarray
) -> np.ndarray:
    """Transmittance for a batch of rays, each up to its own distance.

    Args:
        scene: Gaussian scene
        origins: (R, 3) ray origins
        directions: (R, 3) unit directions
        t: (R,) or scalar distance along each ray

    Returns:
        (R,) values in (0, 1]
    """
    pairs = ray_gaussian_pairs(scene, origins, directions, t_max=t)
    return pairs.transmittance()


def transmittance(scene: GaussianScene, ray: Ray, t: float) -> float:
    """prod_i (1 - G_i(o + min(t, t_i*) w)) over Gaussians supported on [0, t]."""
    values = transmittance_batch(scene, np.asarray([ray.origin]), np.asarray([ray.direction]), np.asarray([t]))
    return float(values[0])


def support_pairs(scene: GaussianScene, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(point, Gaussian) pairs within the support cutoff.

    Returns:
        (point index, Gaussian index, G value, gradient of log(1 - G)) per pair
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(scene) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0), np.zeros((0, 3))
    radius = float(scene.support_radii.max())
    neighbors = scene.spatial_index.query_ball_point(points, r=radius * (1.0 + 1e-9))
    counts = np.fromiter((len(n) for n in neighbors), dtype=np.int64, count=len(points))
    point_idx = np.repeat(np.arange(len(points)), counts)
    gauss_idx = np.fromiter((i for n in neighbors for i in n), dtype=np.int64, count=int(counts.sum()))
    return gaussian_log_gradients(scene, points, point_idx, gauss_idx)


def gaussian_log_gradients(scene: GaussianScene, points: np.ndarray, point_idx: np.ndarray, gauss_idx: np.ndarray):
    """G and grad log(1 - G) for aligned (point, Gaussian) index arrays, cut at support_sigma."""
    d = points[point_idx] - scene.means[gauss_idx]
    pd = np.einsum("kij,kj->ki", scene.precisions[gauss_idx], d)
    q = np.einsum("ki,ki->k", d, pd)
    values = scene.opacities[gauss_idx] * np.exp(-0.5 * q)
    inside = q <= scene.support_sigma ** 2
    values = np.where(inside, values, 0.0)
    grads = (values / (1.0 - values))[:, None] * pd
    return point_idx[inside], gauss_idx[inside], values[inside], grads[inside]


def _facing(scene: GaussianScene, points: np.ndarray, point_idx: np.ndarray, gauss_idx: np.ndarray) -> np.ndarray:
    offsets = points[point_idx] - scene.means[gauss_idx]
    return np.einsum("ki,ki->k", scene.normals[gauss_idx], offsets) >= 0.0


def attenuation_batch(scene: GaussianScene, points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """sum_i max(0, -w . grad log(1 - G_i(x))) per (point, direction) row."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    point_idx, _, _, grads = support_pairs(scene, points)
    terms = np.maximum(0.0, -np.einsum("ki,ki->k", directions[point_idx], grads))
    return np.bincount(point_idx, weights=terms, minlength=len(points))


def oriented_attenuation_batch(scene: GaussianScene, points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """sum_i [n_i . (x - mu_i) >= 0] |w . grad log(1 - G_i(x))| per row."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    point_idx, gauss_idx, _, grads = support_pairs(scene, points)
    on = _facing(scene, points, point_idx, gauss_idx)
    terms = np.abs(np.einsum("ki,ki->k", directions[point_idx], grads)) * on
    return np.bincount(point_idx, weights=terms, minlength=len(points))


def attenuation(scene: GaussianScene, x, w) -> float:
    """Unoriented attenuation at x in direction w; not reciprocal."""
    return float(attenuation_batch(scene, np.asarray(x)[None, :], np.asarray(w)[None, :])[0])


def oriented_attenuation(scene: GaussianScene, x, w) -> float:
    """Oriented attenuation at x; identical for w and -w."""
    return float(oriented_attenuation_batch(scene, np.asarray(x)[None, :], np.asarray(w)[None, :])[0])
