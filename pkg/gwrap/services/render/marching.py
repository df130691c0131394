"""Ray-marched color by quadrature of attenuation and transmittance.

Independent of compositing: color = integral of sigma(t) T(t) c(t) dt
with T(t) = exp(-integral of sigma). Samples cover the union of the
Gaussians' support intervals along the ray. Entering a support interval
multiplies transmittance by 1 - G at the entry point, since the support
cutoff makes each Gaussian switch on there.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from gwrap.api.models import RenderConfig
from gwrap.services.core import GaussianScene, Ray, ray_gaussian_pairs
from .compositing import DEFAULT_RENDER

logger = logging.getLogger(__name__)


def _support_intervals(a: np.ndarray, b: np.ndarray, c: np.ndarray, sigma_sq: float) -> Tuple[np.ndarray, np.ndarray]:
    """Roots of a t^2 - 2 b t + c = sigma^2, clipped to t >= 0."""
    disc = np.sqrt(np.maximum(b * b - a * (c - sigma_sq), 0.0))
    return np.maximum((b - disc) / a, 0.0), np.maximum((b + disc) / a, 0.0)


def _merge(starts: np.ndarray, ends: np.ndarray) -> List[Tuple[float, float]]:
    merged: List[Tuple[float, float]] = []
    for lo, hi in sorted(zip(starts.tolist(), ends.tolist())):
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def ray_march_color(
    scene: GaussianScene, ray: Ray, step: float, config: Optional[RenderConfig] = None
) -> np.ndarray:
    """Quadrature color of one ray.

    Args:
        scene: Gaussian scene
        ray: Ray whose origin lies outside every support
        step: Maximum sample spacing, below a quarter of the smallest scale
        config: Supplies the background color

    Returns:
        RGB color
    """
    config = config or DEFAULT_RENDER
    background = np.asarray(config.background, dtype=float)
    o = np.asarray(ray.origin)
    w = np.asarray(ray.direction)
    pairs = ray_gaussian_pairs(scene, o[None, :], w[None, :])
    if len(pairs) == 0:
        return background.copy()

    gauss = pairs.gaussian
    d = o - scene.means[gauss]
    precision = scene.precisions[gauss]
    pw = np.einsum("kij,j->ki", precision, w)
    a = pw @ w
    b = -np.einsum("ki,ki->k", d, pw)
    c = np.einsum("ki,kij,kj->k", d, precision, d)
    alpha = scene.opacities[gauss]
    sigma_sq = scene.support_sigma ** 2

    starts, ends = _support_intervals(a, b, c, sigma_sq)
    grids = [np.linspace(lo, hi, max(2, int(np.ceil((hi - lo) / step)) + 1)) for lo, hi in _merge(starts, ends)]
    t = np.unique(np.concatenate(grids + [starts]))

    q = c[None, :] - 2.0 * b[None, :] * t[:, None] + a[None, :] * t[:, None] ** 2
    inside = q <= sigma_sq * (1.0 + 1e-12)
    g = np.where(inside, alpha[None, :] * np.exp(-0.5 * q), 0.0)
    # w . grad log(1 - G) along the ray is G/(1-G) (a t - b)
    slope = g / (1.0 - g) * (a[None, :] * t[:, None] - b[None, :])
    per_gaussian = np.maximum(0.0, -slope)
    sigma = per_gaussian.sum(axis=1)

    # color of the nearest supporting Gaussian, by Mahalanobis distance
    nearest = np.argmin(np.where(inside, q, np.inf), axis=1)
    colors = np.where(inside.any(axis=1)[:, None], scene.colors[gauss[nearest]], 0.0)

    # point masses where supports switch on
    entry_log = np.zeros(len(t))
    entry_slot = np.searchsorted(t, starts)
    entry_g = alpha * np.exp(-0.5 * np.minimum(c - 2.0 * b * starts + a * starts ** 2, sigma_sq))
    np.add.at(entry_log, entry_slot, np.log1p(-entry_g))
    entry_color = np.zeros((len(t), 3))

    dt = np.diff(t)
    segment_log = -0.5 * (sigma[1:] + sigma[:-1]) * dt
    log_before = np.concatenate([[0.0], np.cumsum(segment_log)]) + np.concatenate([[0.0], np.cumsum(entry_log)[:-1]])
    transmittance_before = np.exp(log_before)
    transmittance = transmittance_before * np.exp(entry_log)

    np.add.at(entry_color, entry_slot, scene.colors[gauss] * entry_g[:, None])
    entry_weight = np.bincount(entry_slot, weights=entry_g, minlength=len(t))
    # entries sharing a sample split the transmittance drop by their values
    jump = transmittance_before - transmittance
    mean_entry_color = np.divide(
        entry_color, entry_weight[:, None], out=np.zeros_like(entry_color), where=entry_weight[:, None] > 0.0
    )
    color = (jump[:, None] * mean_entry_color).sum(axis=0)

    integrand = (sigma * transmittance)[:, None] * colors
    color += (0.5 * (integrand[1:] + integrand[:-1]) * dt[:, None]).sum(axis=0)
    color += transmittance[-1] * background
    return np.clip(color, 0.0, 1.0)
