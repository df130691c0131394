"""Alpha compositing checked against ray-marched attenuation.

On scenes whose Gaussians do not overlap along a ray, blending sorted
contributions and integrating sigma(t) T(t) c(t) give the same color.
"""
import logging
import time
from typing import Optional, Tuple

import numpy as np

from gwrap.api.models import EquivalenceReport, RenderConfig
from gwrap.services.core import GaussianScene, Ray
from gwrap.services.errors import BadParams
from gwrap.services.parallel import parallel_map, rng_for
from .compositing import DEFAULT_RENDER, composite_rays
from .marching import ray_march_color

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 5e-3


def random_rays(scene: GaussianScene, count: int, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Rays aimed at randomly chosen Gaussian centers from outside every support.

    Returns:
        (origins, directions), each (count, 3)
    """
    if len(scene) == 0:
        raise BadParams("cannot aim rays at an empty scene")
    rng = rng_for(seed, "equivalence-rays")
    targets = scene.means[rng.integers(0, len(scene), size=count)]
    directions = rng.normal(size=(count, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)

    center = 0.5 * (scene.bbox[0] + scene.bbox[1])
    radius = float(np.max(np.linalg.norm(scene.means - center, axis=1)))
    radius += scene.support_sigma * float(scene.scales.max())
    back = np.linalg.norm(targets - center, axis=1) + radius + 1e-3
    return targets - back[:, None] * directions, directions


def compare_compositing(
    scene: GaussianScene,
    origins: np.ndarray,
    directions: np.ndarray,
    step: Optional[float] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    config: Optional[RenderConfig] = None,
) -> EquivalenceReport:
    """Max color difference between composite_rays and ray_march_color.

    Args:
        scene: Gaussian scene
        origins: (R, 3) ray origins outside every support
        directions: (R, 3) unit directions
        step: Marching step; a twentieth of the smallest scale by default
        tolerance: Largest accepted per-channel difference
        config: Compositing settings shared by both renderers

    Returns:
        EquivalenceReport
    """
    start_time = time.time()
    config = config or DEFAULT_RENDER
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    directions = np.asarray(directions, dtype=float).reshape(-1, 3)
    if step is None:
        step = float(scene.scales.min()) / 20.0
    if step <= 0.0:
        raise BadParams("marching step must be positive", step=step)

    blended = composite_rays(scene, origins, directions, config).color
    marched = np.array(
        parallel_map(lambda r: ray_march_color(scene, Ray(tuple(r[0]), tuple(r[1])), step, config), list(zip(origins, directions)))
    ).reshape(-1, 3)
    errors = np.abs(blended - marched).max(axis=1) if len(origins) else np.zeros(0)

    max_error = float(errors.max()) if len(errors) else 0.0
    report = EquivalenceReport(
        rays=len(origins),
        step=step,
        tolerance=tolerance,
        max_error=max_error,
        mean_error=float(errors.mean()) if len(errors) else 0.0,
        worst_ray=int(np.argmax(errors)) if len(errors) else -1,
        passed=max_error <= tolerance,
    )
    logger.info(
        f"Equivalence over {report.rays} rays: max error {report.max_error:.2e} "
        f"(tolerance {tolerance:.1e}) completed in {time.time() - start_time:.2f} seconds"
    )
    return report
