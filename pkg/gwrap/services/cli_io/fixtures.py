"""Synthetic wrapped scenes with analytic ground truth.

Every generator is deterministic: the same parameters give the same scene.
Gaussians are flattened along their outward normal (scale thickness * t,
with t the lattice spacing) unless ``isotropic`` is set, and cameras sit on
a surrounding sphere looking at the scene center.
"""
import logging
from typing import List, Tuple

import numpy as np

from gwrap.api.models import FixtureKind, FixtureParams
from gwrap.services.core import GaussianScene, OrientedGaussian, PinholeCamera, frame_from_normal
from gwrap.services.errors import BadParams
from gwrap.services.parallel import rng_for

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))
FRAME_MARGIN = 1.15


def fibonacci_sphere(count: int) -> np.ndarray:
    """(count, 3) near-uniform unit vectors on the sphere."""
    i = np.arange(count, dtype=float)
    z = 1.0 - 2.0 * (i + 0.5) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = GOLDEN_ANGLE * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _gaussians(
    means: np.ndarray, normals: np.ndarray, spacing: float, params: FixtureParams
) -> List[OrientedGaussian]:
    normal_scale = spacing if params.isotropic else params.thickness * spacing
    scales = (spacing, spacing, normal_scale)
    return [
        OrientedGaussian.create(
            mean=tuple(mu),
            scales=scales,
            rotation=frame_from_normal(n),
            opacity=params.opacity,
            normal=tuple(n),
            normal_sign=params.normal_sign,
            color=params.color,
        )
        for mu, n in zip(means, normals)
    ]


def surrounding_cameras(
    count: int, distance: float, bound: float, resolution: int, hemisphere: bool = False
) -> List[PinholeCamera]:
    """Cameras on a sphere around the origin, each framing a ball of radius ``bound``."""
    if count == 0:
        return []
    directions = fibonacci_sphere(2 * count if hemisphere else count)
    if hemisphere:
        directions = directions[directions[:, 2] > 0.0][:count]
    fov = 2.0 * np.degrees(np.arcsin(min(0.95, FRAME_MARGIN * bound / distance)))
    return [
        PinholeCamera.look_at(distance * d, (0.0, 0.0, 0.0), width=resolution, height=resolution, fov_degrees=fov)
        for d in directions
    ]


def _grid(count_per_side: int, extent: float) -> Tuple[np.ndarray, float]:
    spacing = 2.0 * extent / count_per_side
    ticks = -extent + spacing * (np.arange(count_per_side) + 0.5)
    uu, vv = np.meshgrid(ticks, ticks, indexing="ij")
    return np.column_stack([uu.ravel(), vv.ravel()]), spacing


def sphere_shell(params: FixtureParams) -> GaussianScene:
    normals = fibonacci_sphere(params.n)
    spacing = params.radius * np.sqrt(4.0 * np.pi / params.n)
    cameras = surrounding_cameras(
        params.n_cams, params.camera_distance * params.radius, params.radius, params.resolution
    )
    return GaussianScene(_gaussians(params.radius * normals, normals, spacing, params), cameras)


def plane_patch(params: FixtureParams) -> GaussianScene:
    side = max(1, int(round(np.sqrt(params.n))))
    uv, spacing = _grid(side, params.extent)
    means = np.column_stack([uv, np.zeros(len(uv))])
    normals = np.tile([0.0, 0.0, 1.0], (len(uv), 1))
    cameras = surrounding_cameras(
        params.n_cams, params.camera_distance * params.extent, np.sqrt(2.0) * params.extent,
        params.resolution, hemisphere=True,
    )
    return GaussianScene(_gaussians(means, normals, spacing, params), cameras)


def two_plane(params: FixtureParams) -> GaussianScene:
    side = max(1, int(round(np.sqrt(params.n / 2.0))))
    uv, spacing = _grid(side, params.extent)
    half = 0.5 * params.gap
    top = np.column_stack([uv, np.full(len(uv), half)])
    bottom = np.column_stack([uv, np.full(len(uv), -half)])
    means = np.vstack([top, bottom])
    normals = np.vstack([np.tile([0.0, 0.0, 1.0], (len(uv), 1)), np.tile([0.0, 0.0, -1.0], (len(uv), 1))])
    bound = float(np.hypot(np.sqrt(2.0) * params.extent, half))
    cameras = surrounding_cameras(params.n_cams, params.camera_distance * bound, bound, params.resolution)
    return GaussianScene(_gaussians(means, normals, spacing, params), cameras)


def cube_shell(params: FixtureParams) -> GaussianScene:
    side = max(1, int(round(np.sqrt(params.n / 6.0))))
    uv, spacing = _grid(side, params.radius)
    means, normals = [], []
    for axis in range(3):
        others = [a for a in range(3) if a != axis]
        for sign in (1.0, -1.0):
            face = np.zeros((len(uv), 3))
            face[:, others[0]] = uv[:, 0]
            face[:, others[1]] = uv[:, 1]
            face[:, axis] = sign * params.radius
            normal = np.zeros(3)
            normal[axis] = sign
            means.append(face)
            normals.append(np.tile(normal, (len(uv), 1)))
    bound = np.sqrt(3.0) * params.radius
    cameras = surrounding_cameras(params.n_cams, params.camera_distance * bound, bound, params.resolution)
    return GaussianScene(_gaussians(np.vstack(means), np.vstack(normals), spacing, params), cameras)


GENERATORS = {
    FixtureKind.sphere_shell: sphere_shell,
    FixtureKind.plane_patch: plane_patch,
    FixtureKind.two_plane: two_plane,
    FixtureKind.cube_shell: cube_shell,
}


def make_fixture(kind: FixtureKind, params: FixtureParams = None) -> GaussianScene:
    """Build a synthetic scene.

    Args:
        kind: sphere_shell, plane_patch, two_plane or cube_shell
        params: Generator parameters

    Returns:
        Deterministic GaussianScene with cameras
    """
    params = params or FixtureParams()
    try:
        kind = FixtureKind(kind)
    except ValueError:
        raise BadParams(f"unknown fixture kind '{kind}'")
    scene = GENERATORS[kind](params)
    logger.info(f"Built {kind.value} fixture with {len(scene)} Gaussians and {len(scene.cameras)} cameras")
    return scene


def surface_points(kind: FixtureKind, params: FixtureParams = None, count: int = 100_000, seed: int = 0) -> np.ndarray:
    """Uniform samples of the analytic surface a fixture represents."""
    params = params or FixtureParams()
    kind = FixtureKind(kind)
    rng = rng_for(seed, "fixture-surface", kind.value)
    if kind is FixtureKind.sphere_shell:
        d = rng.normal(size=(count, 3))
        return params.radius * d / np.linalg.norm(d, axis=1, keepdims=True)
    if kind is FixtureKind.plane_patch:
        uv = rng.uniform(-params.extent, params.extent, size=(count, 2))
        return np.column_stack([uv, np.zeros(count)])
    if kind is FixtureKind.two_plane:
        uv = rng.uniform(-params.extent, params.extent, size=(count, 2))
        z = np.where(rng.random(count) < 0.5, 0.5 * params.gap, -0.5 * params.gap)
        return np.column_stack([uv, z])
    points = rng.uniform(-params.radius, params.radius, size=(count, 3))
    axis = rng.integers(0, 3, size=count)
    sign = np.where(rng.random(count) < 0.5, 1.0, -1.0)
    points[np.arange(count), axis] = sign * params.radius
    return points
