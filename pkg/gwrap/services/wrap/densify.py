"""Per-Gaussian alignment error and flip-and-clone densification."""
import logging
from typing import Optional, Sequence

import numpy as np

from gwrap.api.models import RenderConfig
from gwrap.services.core import GaussianScene, PinholeCamera
from gwrap.services.errors import BadParams
from gwrap.services.parallel import parallel_map
from gwrap.services.render import alignment_loss_map, depth_to_pseudo_normals, render_batch

logger = logging.getLogger(__name__)


def _view_error(scene: GaussianScene, camera: PinholeCamera, config: Optional[RenderConfig]):
    result = render_batch(scene, camera, config)
    pseudo = depth_to_pseudo_normals(result.depth.reshape(camera.height, camera.width), camera).reshape(-1, 3)
    loss_map, _ = alignment_loss_map(result.normal, pseudo)
    order = result.order
    n = len(scene)
    weighted = np.bincount(order.gaussian, weights=order.weight * loss_map[order.ray], minlength=n)
    weights = np.bincount(order.gaussian, weights=order.weight, minlength=n)
    return weighted, weights


def per_gaussian_error(
    scene: GaussianScene,
    cameras: Sequence[PinholeCamera],
    config: Optional[RenderConfig] = None,
) -> np.ndarray:
    """Blend-weight-averaged alignment loss of every Gaussian over the given views.

    Args:
        scene: Gaussian scene
        cameras: Views to render
        config: Compositing settings

    Returns:
        (N,) errors; zero for Gaussians with no weight in any view
    """
    n = len(scene)
    weighted = np.zeros(n)
    weights = np.zeros(n)
    for view_weighted, view_weights in parallel_map(lambda cam: _view_error(scene, cam, config), list(cameras)):
        weighted += view_weighted
        weights += view_weights
    return np.divide(weighted, weights, out=np.zeros(n), where=weights > 0.0)


def densify_flip(scene: GaussianScene, errors: np.ndarray, fraction: float) -> GaussianScene:
    """Append normal-flipped clones of the highest-error Gaussians.

    Ties are broken by ascending index. Existing Gaussians are untouched.

    Args:
        scene: Gaussian scene
        errors: (N,) per-Gaussian errors
        fraction: Share of Gaussians to clone, in (0, 0.5]

    Returns:
        Scene with floor(fraction * N) clones (at least one) appended
    """
    if not 0.0 < fraction <= 0.5:
        raise BadParams(f"densify fraction must lie in (0, 0.5], got {fraction}")
    errors = np.asarray(errors, dtype=float)
    n = len(scene)
    if len(errors) != n:
        raise BadParams(f"got {len(errors)} errors for {n} Gaussians")
    if n == 0:
        return scene
    count = max(1, int(np.floor(fraction * n + 1e-9)))
    ranked = np.lexsort((np.arange(n), -errors))
    chosen = np.sort(ranked[:count])
    clones = [scene.gaussians[i].flipped() for i in chosen]
    logger.info(f"Densify: cloned {count} of {n} Gaussians with flipped normals")
    return scene.with_gaussians(list(scene.gaussians) + clones)
