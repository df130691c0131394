"""Image-space renders and the normal alignment loss.

render_maps casts one ray per pixel center. Pseudo-normals come from the
back-projected median depth and are returned in world space, so they can be
compared directly with the composited Gaussian normals.
"""
import time
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from gwrap.api.models import RenderConfig
from gwrap.services.core import GaussianScene, PinholeCamera
from .compositing import CompositeResult, composite_rays

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RenderedMaps:
    """Per-pixel outputs of one view.

    Attributes:
        color: (H, W, 3) in [0, 1]
        alpha: (H, W) accumulated opacity
        depth: (H, W) median ray distance, NaN where alpha < 0.5
        normal: (H, W, 3) composited oriented normals, world space
    """

    color: np.ndarray
    alpha: np.ndarray
    depth: np.ndarray
    normal: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.alpha.shape


def render_batch(
    scene: GaussianScene, camera: PinholeCamera, config: Optional[RenderConfig] = None
) -> CompositeResult:
    """Composite every pixel ray of a camera, flattened row-major."""
    origins, directions = camera.pixel_rays()
    return composite_rays(scene, origins, directions, config)


def render_maps(scene: GaussianScene, camera: PinholeCamera, config: Optional[RenderConfig] = None) -> RenderedMaps:
    """Render color, alpha, median depth and normal maps for one camera.

    Args:
        scene: Gaussian scene
        camera: View to render; one ray per pixel center
        config: Compositing settings

    Returns:
        RenderedMaps, bit-identical for identical inputs
    """
    start_time = time.time()
    h, w = camera.height, camera.width
    result = render_batch(scene, camera, config)
    maps = RenderedMaps(
        color=result.color.reshape(h, w, 3),
        alpha=result.alpha.reshape(h, w),
        depth=result.depth.reshape(h, w),
        normal=result.normal.reshape(h, w, 3),
    )
    logger.debug(f"Render {w}x{h} with {len(scene)} Gaussians completed in {time.time() - start_time:.2f} seconds")
    return maps


def depth_to_pseudo_normals(depth: np.ndarray, camera: PinholeCamera) -> np.ndarray:
    """Unit surface normals from a median-depth map.

    Each pixel is back-projected along its ray; the normal is the cross
    product of the differences to its +x and +y neighbours (the -x / -y
    neighbour on the last column / row), oriented toward the camera and
    rotated to world space. Pixels whose own depth or any 4-neighbour depth
    is not finite get a zero normal.

    Args:
        depth: (H, W) ray distances, NaN where nothing was hit
        camera: Camera that produced the depth map

    Returns:
        (H, W, 3) world-space unit normals or zeros
    """
    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape
    points = camera.pixel_directions() * depth[..., None]

    finite = np.isfinite(depth)
    valid = finite.copy()
    valid[:, 1:] &= finite[:, :-1]
    valid[:, :-1] &= finite[:, 1:]
    valid[1:, :] &= finite[:-1, :]
    valid[:-1, :] &= finite[1:, :]
    if w < 2 or h < 2:
        return np.zeros((h, w, 3))

    dx = np.empty_like(points)
    dx[:, :-1] = points[:, 1:] - points[:, :-1]
    dx[:, -1] = points[:, -1] - points[:, -2]
    dy = np.empty_like(points)
    dy[:-1] = points[1:] - points[:-1]
    dy[-1] = points[-1] - points[-2]

    normals = np.cross(dx, dy)
    normals = np.where(valid[..., None], normals, 0.0)
    # orient toward the camera center at the camera-space origin
    toward = np.einsum("hwi,hwi->hw", normals, np.nan_to_num(points)) > 0.0
    normals[toward] *= -1.0
    norms = np.linalg.norm(normals, axis=-1, keepdims=True)
    normals = np.divide(normals, norms, out=np.zeros_like(normals), where=norms > 0.0)
    return normals @ camera.rotation.T


def alignment_loss_map(normal_map: np.ndarray, pseudo_normals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-pixel 1 - N . n_D, and the mask of pixels where both terms are nonzero."""
    contributing = (np.linalg.norm(normal_map, axis=-1) > 0.0) & (np.linalg.norm(pseudo_normals, axis=-1) > 0.0)
    dots = np.einsum("...i,...i->...", normal_map, pseudo_normals)
    return np.where(contributing, 1.0 - dots, 0.0), contributing


def normal_alignment_loss(
    scene: GaussianScene, camera: PinholeCamera, config: Optional[RenderConfig] = None
) -> Tuple[float, np.ndarray]:
    """Mean of 1 - N(p) . n_D(p) over contributing pixels, and the (H, W) loss map."""
    maps = render_maps(scene, camera, config)
    pseudo = depth_to_pseudo_normals(maps.depth, camera)
    loss_map, contributing = alignment_loss_map(maps.normal, pseudo)
    count = int(contributing.sum())
    loss = float(loss_map.sum() / count) if count else 0.0
    return loss, loss_map
