"""Batched ray/Gaussian pair kernel.

Fields and rendering both reduce to the same question: for a batch of rays
(each with a segment [0, t_max]) which Gaussians have support on the
segment, where along the ray does each peak, and what is its value there.
This module answers it for many rays at once.

A coarse bounding-sphere test (radius support_sigma * max scale) prunes the
(ray, Gaussian) grid with dense matrix products; survivors are evaluated
exactly with their precision matrices.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from gwrap.services.parallel import chunk_slices, parallel_map
from .scene import GaussianScene

logger = logging.getLogger(__name__)

# Upper bound on (rays x gaussians) cells held in memory per chunk
PAIR_BUDGET = 4_000_000


@dataclass(frozen=True)
class RayPairs:
    """Sparse (ray, Gaussian) interactions of a ray batch.

    Attributes:
        ray: (K,) ray index of each pair
        gaussian: (K,) Gaussian index of each pair
        t_star: (K,) clamped argmax of G along the ray
        peak: (K,) G at t_star, zero beyond the support cutoff
        value: (K,) G at min(t_max, t_star), zero beyond the support cutoff
        num_rays: Number of rays in the batch
    """

    ray: np.ndarray
    gaussian: np.ndarray
    t_star: np.ndarray
    peak: np.ndarray
    value: np.ndarray
    num_rays: int

    @classmethod
    def empty(cls, num_rays: int) -> "RayPairs":
        ints = np.zeros(0, dtype=np.int64)
        floats = np.zeros(0)
        return cls(ints, ints, floats, floats, floats, num_rays)

    def __len__(self) -> int:
        return len(self.ray)

    def log_transmittance(self) -> np.ndarray:
        """Per-ray sum of log(1 - G) at min(t_max, t*)."""
        return np.bincount(self.ray, weights=np.log1p(-self.value), minlength=self.num_rays)

    def transmittance(self) -> np.ndarray:
        return np.exp(self.log_transmittance())


def max_contribution_t_batch(
    origins: np.ndarray, directions: np.ndarray, means: np.ndarray, precisions: np.ndarray
) -> np.ndarray:
    """max(0, ((mu - o)^T P w) / (w^T P w)) for aligned arrays of rays and Gaussians."""
    pw = np.einsum("kij,kj->ki", precisions, directions)
    numerator = np.einsum("ki,ki->k", means - origins, pw)
    denominator = np.einsum("ki,ki->k", directions, pw)
    return np.maximum(0.0, numerator / denominator)


def gaussian_values(
    points: np.ndarray,
    means: np.ndarray,
    precisions: np.ndarray,
    opacities: np.ndarray,
    support_sigma: Optional[float] = None,
) -> np.ndarray:
    """alpha exp(-q/2) for aligned points and Gaussians, zero where q > support_sigma^2."""
    d = points - means
    q = np.einsum("ki,kij,kj->k", d, precisions, d)
    values = opacities * np.exp(-0.5 * q)
    if support_sigma is not None:
        values = np.where(q <= support_sigma ** 2, values, 0.0)
    return values


def _candidate_pairs(scene: GaussianScene, origins: np.ndarray, directions: np.ndarray, t_max: np.ndarray):
    means = scene.means
    along = directions @ means.T - np.einsum("ri,ri->r", directions, origins)[:, None]
    to_mean_sq = (
        np.einsum("ni,ni->n", means, means)[None, :]
        - 2.0 * origins @ means.T
        + np.einsum("ri,ri->r", origins, origins)[:, None]
    )
    clamped = np.clip(along, 0.0, t_max[:, None])
    dist_sq = to_mean_sq - 2.0 * clamped * along + clamped ** 2
    # small slack absorbs cancellation in the expanded distance
    radius_sq = (scene.support_radii ** 2)[None, :] * (1.0 + 1e-6) + 1e-12
    return np.nonzero(dist_sq <= radius_sq)


def _pairs_chunk(scene: GaussianScene, origins: np.ndarray, directions: np.ndarray, t_max: np.ndarray, offset: int):
    ray, gauss = _candidate_pairs(scene, origins, directions, t_max)
    o = origins[ray]
    w = directions[ray]
    mu = scene.means[gauss]
    precision = scene.precisions[gauss]
    alpha = scene.opacities[gauss]
    t_star = max_contribution_t_batch(o, w, mu, precision)
    peak = gaussian_values(o + t_star[:, None] * w, mu, precision, alpha, scene.support_sigma)
    t_eval = np.minimum(t_star, t_max[ray])
    value = np.where(
        t_eval == t_star,
        peak,
        gaussian_values(o + t_eval[:, None] * w, mu, precision, alpha, scene.support_sigma),
    )
    keep = (value > 0.0) | (peak > 0.0)
    return ray[keep] + offset, gauss[keep], t_star[keep], peak[keep], value[keep]


def ray_gaussian_pairs(
    scene: GaussianScene,
    origins: np.ndarray,
    directions: np.ndarray,
    t_max: Optional[np.ndarray] = None,
) -> RayPairs:
    """Collect every (ray, Gaussian) pair with support on the ray segment.

    Args:
        scene: Scene to intersect
        origins: (R, 3) ray origins
        directions: (R, 3) unit ray directions
        t_max: (R,) segment ends, None for unbounded rays

    Returns:
        RayPairs sorted by ray index, then Gaussian index
    """
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    directions = np.asarray(directions, dtype=float).reshape(-1, 3)
    num_rays = len(origins)
    if t_max is None:
        t_max = np.full(num_rays, np.inf)
    else:
        t_max = np.broadcast_to(np.asarray(t_max, dtype=float), (num_rays,)).copy()
    if num_rays == 0 or len(scene) == 0:
        return RayPairs.empty(num_rays)

    chunk = max(1, PAIR_BUDGET // len(scene))
    slices = chunk_slices(num_rays, chunk)
    parts = parallel_map(
        lambda sl: _pairs_chunk(scene, origins[sl], directions[sl], t_max[sl], sl.start),
        slices,
    )
    ray, gauss, t_star, peak, value = (np.concatenate(arrays) for arrays in zip(*parts))
    return RayPairs(ray.astype(np.int64), gauss.astype(np.int64), t_star, peak, value, num_rays)
