"""Orientation-only wrapping optimizer.

Means, scales, opacities and colors stay fixed, so every view's ray/Gaussian
pairs, median depth and pseudo-normals are computed once per scene layout.
Within one iteration the blend order is held fixed; the alignment loss is
then a linear function of each Gaussian's oriented normal, and the central
finite differences on (normal_sign, normal_dir) are taken through it.
"""
import time
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from gwrap.api.models import RenderConfig, WrapConfig
from gwrap.services.core import GaussianScene, PinholeCamera, RayPairs, oriented_normals
from gwrap.services.errors import Diverged
from gwrap.services.parallel import parallel_map, rng_for
from gwrap.services.render import alignment_loss_map, blend_order, composite_rays, depth_to_pseudo_normals
from .densify import densify_flip, per_gaussian_error
from .report import WrapReport

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 4.0
# reference losses below this count as this value when judging divergence
DIVERGENCE_FLOOR = 0.05


@dataclass(frozen=True)
class ViewCache:
    camera: PinholeCamera
    directions: np.ndarray
    pairs: RayPairs
    pseudo_normals: np.ndarray


def build_view(scene: GaussianScene, camera: PinholeCamera, config: Optional[RenderConfig] = None) -> ViewCache:
    """Pairs and pseudo-normals of one view; both independent of the normals."""
    origins, directions = camera.pixel_rays()
    result = composite_rays(scene, origins, directions, config)
    pseudo = depth_to_pseudo_normals(result.depth.reshape(camera.height, camera.width), camera)
    return ViewCache(camera, directions, result.pairs, pseudo.reshape(-1, 3))


def view_terms(
    view: ViewCache, normals: np.ndarray, num_gaussians: int, early_stop_T: float
) -> Tuple[float, int, np.ndarray, np.ndarray]:
    """Loss and linear coefficients of one view for the given normals.

    Returns:
        (summed pixel loss, contributing pixel count,
         (N, 3) sum_p w_i(p) n_D(p) over contributing pixels, (N,) sum_p w_i(p))
    """
    order = blend_order(view.pairs, view.directions, normals, early_stop_T)
    normal_map = order.accumulate(normals) if num_gaussians else np.zeros_like(view.pseudo_normals)
    loss_map, contributing = alignment_loss_map(normal_map, view.pseudo_normals)

    weights = order.weight * contributing[order.ray]
    target = view.pseudo_normals[order.ray]
    coefficients = np.stack(
        [np.bincount(order.gaussian, weights=weights * target[:, c], minlength=num_gaussians) for c in range(3)],
        axis=1,
    )
    visibility = np.bincount(order.gaussian, weights=order.weight, minlength=num_gaussians)
    return float(loss_map.sum()), int(contributing.sum()), coefficients, visibility


def fd_normal_gradients(
    signs: np.ndarray, dirs: np.ndarray, coefficients: np.ndarray, step: float, loss_weight: float = 1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """Central differences of loss_weight * (const - sum_i n_i . c_i).

    Args:
        signs: (N,) normal_sign parameters
        dirs: (N, 3) normal_dir parameters
        coefficients: (N, 3) linear loss coefficients c_i
        step: Finite-difference step
        loss_weight: Objective weight

    Returns:
        ((N,) gradient wrt normal_sign, (N, 3) gradient wrt normal_dir)
    """
    def loss_delta(s_plus, d_plus, s_minus, d_minus):
        diff = oriented_normals(s_plus, d_plus) - oriented_normals(s_minus, d_minus)
        return -loss_weight * np.einsum("ni,ni->n", diff, coefficients) / (2.0 * step)

    grad_sign = loss_delta(signs + step, dirs, signs - step, dirs)
    grad_dir = np.zeros_like(dirs)
    for axis in range(3):
        offset = np.zeros(3)
        offset[axis] = step
        grad_dir[:, axis] = loss_delta(signs, dirs + offset, signs, dirs - offset)
    return grad_sign, grad_dir


def _build_views(scene: GaussianScene, render: Optional[RenderConfig]) -> List[ViewCache]:
    return parallel_map(lambda cam: build_view(scene, cam, render), list(scene.cameras))


def _view_losses(
    views: Sequence[ViewCache], normals: np.ndarray, n: int, early_stop_T: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Summed pixel loss and contributing pixel count of every view."""
    terms = [view_terms(view, normals, n, early_stop_T)[:2] for view in views]
    losses = np.array([t[0] for t in terms], dtype=float)
    pixels = np.array([t[1] for t in terms], dtype=np.int64)
    return losses, pixels


def divergence_reference(initial_losses: np.ndarray, initial_pixels: np.ndarray, chosen: np.ndarray) -> float:
    """Initial mean loss over the chosen views, raised to DIVERGENCE_FLOOR."""
    pixels = int(initial_pixels[chosen].sum())
    mean = float(initial_losses[chosen].sum()) / pixels if pixels else 0.0
    return max(mean, DIVERGENCE_FLOOR)


def optimize_normals(
    scene: GaussianScene,
    config: Optional[WrapConfig] = None,
    seed: int = 0,
    render: Optional[RenderConfig] = None,
) -> Tuple[GaussianScene, WrapReport]:
    """Gradient descent on the normal alignment loss over (normal_sign, normal_dir).

    Each iteration samples views_per_step cameras, takes central finite
    differences for Gaussians whose blend weight in those views exceeds
    weight_floor, steps with the sign and direction learning rates and
    renormalizes normal_dir. Every densify_every iterations the highest-error
    Gaussians are cloned with flipped normals.

    Args:
        scene: Scene with cameras; only normal parameters change
        config: Optimization schedule
        seed: Seed of the per-iteration view sampling
        render: Compositing settings

    Returns:
        (updated scene, WrapReport)

    Raises:
        NoCameras: If the scene has no cameras
        Diverged: If an iteration's loss exceeds 4x the initial loss of the same views,
            with that reference floored at DIVERGENCE_FLOOR
    """
    config = config or WrapConfig()
    render = render or RenderConfig()
    scene.require_cameras()
    report = WrapReport()
    if config.iterations == 0:
        return scene, report

    start_time = time.time()
    early_stop = render.early_stop_T
    views = _build_views(scene, render)
    signs = scene.normal_signs.copy()
    dirs = scene.normal_dirs / np.linalg.norm(scene.normal_dirs, axis=1, keepdims=True)
    initial_losses, initial_pixels = _view_losses(views, oriented_normals(signs, dirs), len(scene), early_stop)
    initial = float(initial_losses.sum()) / max(int(initial_pixels.sum()), 1)
    logger.info(f"Wrap start: {len(scene)} Gaussians, {len(views)} views, initial loss {initial:.4f}")

    for iteration in range(config.iterations):
        if config.densify and iteration > 0 and iteration % config.densify_every == 0:
            current = scene.with_normals(signs, dirs)
            errors = per_gaussian_error(current, current.cameras, render)
            before = len(current)
            scene = densify_flip(current, errors, config.densify_fraction)
            report.clones_added[iteration] = len(scene) - before
            views = _build_views(scene, render)
            signs = scene.normal_signs.copy()
            dirs = scene.normal_dirs.copy()
            logger.info(
                f"Densify at iteration {iteration}: {len(scene)} Gaussians "
                f"after {time.time() - start_time:.2f} seconds"
            )

        n = len(scene)
        rng = rng_for(seed, "wrap-views", iteration)
        chosen = rng.choice(len(views), size=min(config.views_per_step, len(views)), replace=False)
        normals = oriented_normals(signs, dirs)

        total, pixels = 0.0, 0
        coefficients = np.zeros((n, 3))
        visibility = np.zeros(n)
        for index in np.sort(chosen):
            loss, count, coeff, vis = view_terms(views[index], normals, n, early_stop)
            total += loss
            pixels += count
            coefficients += coeff
            visibility += vis
        step_loss = total / pixels if pixels else 0.0
        report.loss_trace.append(step_loss)
        reference = divergence_reference(initial_losses, initial_pixels, chosen)
        if step_loss > DIVERGENCE_FACTOR * reference:
            raise Diverged(
                f"loss {step_loss:.4f} exceeded {DIVERGENCE_FACTOR}x the initial {reference:.4f} of the same views",
                iteration=iteration,
            )

        active = visibility > config.weight_floor
        if not active.any():
            continue
        grad_sign, grad_dir = fd_normal_gradients(
            signs[active], dirs[active], coefficients[active], config.fd_step, config.loss_weight
        )
        signs[active] -= config.learning_rate * grad_sign
        updated = dirs[active] - config.dir_learning_rate * grad_dir
        norms = np.linalg.norm(updated, axis=1, keepdims=True)
        # a direction step can only vanish by cancellation; keep the old direction then
        dirs[active] = np.where(norms > 1e-12, updated / np.where(norms > 0.0, norms, 1.0), dirs[active])

        if iteration % 50 == 0:
            logger.debug(f"Iteration {iteration}: loss {step_loss:.4f}, {int(active.sum())} active Gaussians")

    scene = scene.with_normals(signs, dirs)
    report.errors = per_gaussian_error(scene, scene.cameras, render)
    logger.info(
        f"Wrap of {config.iterations} iterations completed in {time.time() - start_time:.2f} seconds, "
        f"final loss {report.loss_trace[-1]:.4f}, {report.total_clones} clones"
    )
    return scene, report
