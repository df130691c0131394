"""Alpha compositing of ray/Gaussian contributions.

Each Gaussian is evaluated once per ray, at its point of maximum
contribution t*, and blended front to back. Contributions sharing a t* are
ordered camera-facing first, then by index. Median depth is the first
crossing of transmittance 0.5, found by bisection on the exact
transmittance of the ray.
"""
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from gwrap.api.models import RenderConfig
from gwrap.services.core import GaussianScene, Ray, RayPairs, ray_gaussian_pairs

logger = logging.getLogger(__name__)

DEFAULT_RENDER = RenderConfig()


class Contribution(NamedTuple):
    index: int
    t_star: float
    peak: float
    weight: float


@dataclass(frozen=True)
class BlendOrder:
    """Sorted, truncated contributions of a ray batch.

    Attributes:
        ray, gaussian, t_star, peak: Per contribution, front to back within each ray
        weight: Blend weight G_i * prod_{j<i} (1 - G_j)
        final_transmittance: (R,) transmittance after the last kept contribution
        crossing: (R,) t* of the first contribution leaving transmittance <= 0.5, NaN if none
    """

    ray: np.ndarray
    gaussian: np.ndarray
    t_star: np.ndarray
    peak: np.ndarray
    weight: np.ndarray
    final_transmittance: np.ndarray
    crossing: np.ndarray

    @property
    def num_rays(self) -> int:
        return len(self.final_transmittance)

    def accumulate(self, values: np.ndarray) -> np.ndarray:
        """sum_i w_i * values[gaussian_i] per ray, for (N,) or (N, C) per-Gaussian values."""
        per_pair = np.asarray(values)[self.gaussian]
        if per_pair.ndim == 1:
            return np.bincount(self.ray, weights=self.weight * per_pair, minlength=self.num_rays)
        return np.stack(
            [
                np.bincount(self.ray, weights=self.weight * per_pair[:, c], minlength=self.num_rays)
                for c in range(per_pair.shape[1])
            ],
            axis=1,
        )


def blend_order(
    pairs: RayPairs,
    directions: np.ndarray,
    normals: np.ndarray,
    early_stop_T: float = DEFAULT_RENDER.early_stop_T,
) -> BlendOrder:
    """Sort contributions by (ray, t*, facing, index) and compute blend weights.

    Args:
        pairs: Ray/Gaussian pairs with peak values
        directions: (R, 3) ray directions
        normals: (N, 3) oriented normals used for the facing tie-break
        early_stop_T: Contributions after transmittance drops below this are dropped
    """
    live = pairs.peak > 0.0
    ray, gauss, t_star, peak = pairs.ray[live], pairs.gaussian[live], pairs.t_star[live], pairs.peak[live]
    facing = np.einsum("ki,ki->k", normals[gauss], directions[ray]) < 0.0
    order = np.lexsort((gauss, ~facing, t_star, ray))
    ray, gauss, t_star, peak = ray[order], gauss[order], t_star[order], peak[order]

    num_rays = pairs.num_rays
    logs = np.log1p(-peak)
    inclusive = np.cumsum(logs)
    exclusive = inclusive - logs
    if len(ray):
        first = np.searchsorted(ray, np.arange(num_rays))
        first = np.minimum(first, len(ray) - 1)
        offset = exclusive[first][ray]
    else:
        offset = np.zeros(0)
    before = np.exp(exclusive - offset)
    after = np.exp(inclusive - offset)

    keep = before >= early_stop_T
    ray, gauss, t_star, peak = ray[keep], gauss[keep], t_star[keep], peak[keep]
    before, after = before[keep], after[keep]
    weight = peak * before

    final = np.ones(num_rays)
    if len(ray):
        last = np.r_[ray[1:] != ray[:-1], True]
        final[ray[last]] = after[last]

    crossing = np.full(num_rays, np.nan)
    crossed = after <= 0.5
    if crossed.any():
        rays_crossed = ray[crossed]
        first_cross = np.r_[True, rays_crossed[1:] != rays_crossed[:-1]]
        crossing[rays_crossed[first_cross]] = t_star[crossed][first_cross]

    return BlendOrder(ray, gauss, t_star, peak, weight, final, crossing)


def _pair_quadratics(scene: GaussianScene, pairs: RayPairs, origins: np.ndarray, directions: np.ndarray):
    """Coefficients of q(t) = c - 2 b t + a t^2 for every pair."""
    w = directions[pairs.ray]
    d = origins[pairs.ray] - scene.means[pairs.gaussian]
    precision = scene.precisions[pairs.gaussian]
    pw = np.einsum("kij,kj->ki", precision, w)
    a = np.einsum("ki,ki->k", w, pw)
    b = -np.einsum("ki,ki->k", d, pw)
    c = np.einsum("ki,kij,kj->k", d, precision, d)
    return a, b, c


def median_depth(
    scene: GaussianScene,
    pairs: RayPairs,
    origins: np.ndarray,
    directions: np.ndarray,
    upper: np.ndarray,
    config: RenderConfig = DEFAULT_RENDER,
) -> np.ndarray:
    """Bisection for T(t) = 0.5 on [0, upper] per ray; NaN where upper is NaN."""
    depth = np.full(len(upper), np.nan)
    active = np.flatnonzero(np.isfinite(upper))
    if len(active) == 0:
        return depth

    a, b, c = _pair_quadratics(scene, pairs, origins, directions)
    alpha = scene.opacities[pairs.gaussian]
    sigma_sq = scene.support_sigma ** 2
    slot = np.full(pairs.num_rays, -1)
    slot[active] = np.arange(len(active))
    member = slot[pairs.ray] >= 0
    pair_slot = slot[pairs.ray][member]
    a, b, c, alpha, t_star = a[member], b[member], c[member], alpha[member], pairs.t_star[member]

    def transmittance_at(t: np.ndarray) -> np.ndarray:
        tt = np.minimum(t[pair_slot], t_star)
        q = c - 2.0 * b * tt + a * tt * tt
        g = np.where(q <= sigma_sq, alpha * np.exp(-0.5 * q), 0.0)
        return np.exp(np.bincount(pair_slot, weights=np.log1p(-g), minlength=len(active)))

    lo = np.zeros(len(active))
    hi = upper[active].astype(float)
    result = hi.copy()
    pending = np.ones(len(active), dtype=bool)
    for _ in range(config.median_max_iter):
        mid = 0.5 * (lo + hi)
        value = transmittance_at(mid)
        done = pending & (np.abs(value - 0.5) < config.median_tol)
        result[done] = mid[done]
        pending &= ~done
        if not pending.any():
            break
        above = value > 0.5
        lo = np.where(pending & above, mid, lo)
        hi = np.where(pending & ~above, mid, hi)
        result[pending] = mid[pending]
    depth[active] = result
    return depth


@dataclass(frozen=True)
class CompositeResult:
    color: np.ndarray
    alpha: np.ndarray
    depth: np.ndarray
    normal: np.ndarray
    order: BlendOrder
    pairs: RayPairs


def composite_rays(
    scene: GaussianScene,
    origins: np.ndarray,
    directions: np.ndarray,
    config: Optional[RenderConfig] = None,
    normals: Optional[np.ndarray] = None,
) -> CompositeResult:
    """Composite color, alpha, median depth and normal for a batch of rays."""
    config = config or DEFAULT_RENDER
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    directions = np.asarray(directions, dtype=float).reshape(-1, 3)
    normals = scene.normals if normals is None else normals
    pairs = ray_gaussian_pairs(scene, origins, directions)
    order = blend_order(pairs, directions, normals, config.early_stop_T)

    num_rays = len(origins)
    if len(scene):
        color = order.accumulate(scene.colors)
        normal = order.accumulate(normals)
        alpha = order.accumulate(np.ones(len(scene)))
    else:
        color = np.zeros((num_rays, 3))
        normal = np.zeros((num_rays, 3))
        alpha = np.zeros(num_rays)
    color = np.clip(color + order.final_transmittance[:, None] * np.asarray(config.background), 0.0, 1.0)
    alpha = np.clip(alpha, 0.0, 1.0)

    upper = np.where(alpha >= 0.5, order.crossing, np.nan)
    # a ray at alpha >= 0.5 whose running product never dipped to 0.5 is a rounding tie
    tie = (alpha >= 0.5) & np.isnan(upper)
    if tie.any():
        last_t = np.full(num_rays, np.nan)
        last_t[order.ray] = order.t_star
        upper[tie] = last_t[tie]
    depth = median_depth(scene, pairs, origins, directions, upper, config)
    return CompositeResult(color, alpha, depth, normal, order, pairs)


def ray_contributions(scene: GaussianScene, ray: Ray, config: Optional[RenderConfig] = None) -> List[Contribution]:
    """Front-to-back contributions of one ray, truncated at early_stop_T."""
    config = config or DEFAULT_RENDER
    directions = np.asarray([ray.direction])
    pairs = ray_gaussian_pairs(scene, np.asarray([ray.origin]), directions)
    order = blend_order(pairs, directions, scene.normals, config.early_stop_T)
    return [
        Contribution(int(i), float(t), float(p), float(w))
        for i, t, p, w in zip(order.gaussian, order.t_star, order.peak, order.weight)
    ]


def composite_ray(
    scene: GaussianScene, ray: Ray, config: Optional[RenderConfig] = None
) -> Tuple[np.ndarray, float, float, np.ndarray]:
    """(color, alpha, median_t, normal) of one ray."""
    result = composite_rays(scene, np.asarray([ray.origin]), np.asarray([ray.direction]), config)
    return result.color[0], float(result.alpha[0]), float(result.depth[0]), result.normal[0]


def final_transmittance(scene: GaussianScene, ray: Ray, config: Optional[RenderConfig] = None) -> float:
    """Transmittance left after the kept contributions of one ray."""
    config = config or DEFAULT_RENDER
    directions = np.asarray([ray.direction])
    pairs = ray_gaussian_pairs(scene, np.asarray([ray.origin]), directions)
    return float(blend_order(pairs, directions, scene.normals, config.early_stop_T).final_transmittance[0])
