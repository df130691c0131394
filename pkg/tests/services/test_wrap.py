import numpy as np
import pandas as pd
import pytest

from gwrap.api.models import WrapConfig
from gwrap.services.core import GaussianScene, PinholeCamera
from gwrap.services.errors import BadParams, Diverged, NoCameras
from gwrap.services.render import alignment_loss_map, depth_to_pseudo_normals, render_maps
from gwrap.services.wrap import (
    WrapReport,
    build_view,
    densify_flip,
    fd_normal_gradients,
    optimize_normals,
    per_gaussian_error,
    view_terms,
)
from gwrap.services.wrap.optimizer import DIVERGENCE_FLOOR, divergence_reference
from tests.helpers import isotropic, plane_gaussians, random_gaussian

UP = np.array([0.0, 0.0, 1.0])


def _angles_to_up(scene: GaussianScene) -> np.ndarray:
    unit = scene.normals / np.linalg.norm(scene.normals, axis=1, keepdims=True)
    return np.degrees(np.arccos(np.clip(unit @ UP, -1.0, 1.0)))


def _top_view_plane(normal_sign=5.0):
    gaussians, _ = plane_gaussians(opacity=0.95, normal_sign=normal_sign)
    camera = PinholeCamera.look_at((0.0, 0.0, 3.0), (0.0, 0.0, 0.0), width=16, height=16, fov_degrees=20.0)
    far = isotropic((10.0, 10.0, 10.0), sigma=0.1)
    return GaussianScene(gaussians + [far], [camera])


def test_densify_rejects_bad_fraction(plane_scene):
    errors = np.zeros(len(plane_scene))
    for fraction in (0.0, 0.6):
        with pytest.raises(BadParams):
            densify_flip(plane_scene, errors, fraction)
    with pytest.raises(BadParams):
        densify_flip(plane_scene, errors[:-1], 0.1)


def test_densify_clones_highest_errors(rng):
    scene = GaussianScene([random_gaussian(rng) for _ in range(10)])
    errors = np.array([0.1, 0.9, 0.5, 0.9, 0.0, 0.2, 0.3, 0.4, 0.6, 0.7])
    dense = densify_flip(scene, errors, 0.2)
    assert len(dense) == 12
    assert dense.gaussians[:10] == scene.gaussians
    assert dense.gaussians[10:] == (scene.gaussians[1].flipped(), scene.gaussians[3].flipped())
    np.testing.assert_array_equal(dense.normals[10:], -scene.normals[[1, 3]])
    np.testing.assert_array_equal(dense.means[10:], scene.means[[1, 3]])


def test_densify_ties_by_index_and_minimum_one(rng):
    scene = GaussianScene([random_gaussian(rng) for _ in range(10)])
    dense = densify_flip(scene, np.ones(10), 0.3)
    assert dense.gaussians[10:] == tuple(scene.gaussians[i].flipped() for i in (0, 1, 2))
    small = GaussianScene(scene.gaussians[:3])
    assert len(densify_flip(small, np.zeros(3), 0.1)) == 4


def test_per_gaussian_error_wrapped_and_flipped():
    wrapped = _top_view_plane()
    errors = per_gaussian_error(wrapped, wrapped.cameras)
    assert errors[-1] == 0.0
    assert errors.max() < 0.05

    flipped = _top_view_plane(normal_sign=-5.0)
    errors = per_gaussian_error(flipped, flipped.cameras)
    seen = errors > 0.0
    assert seen.sum() > 20
    assert errors[seen].min() > 1.9


def test_view_loss_is_linear_in_normals(plane_scene, rng):
    view = build_view(plane_scene, plane_scene.cameras[0])
    signs = rng.uniform(-3.0, 3.0, size=len(plane_scene))
    scene = plane_scene.with_normals(signs, plane_scene.normal_dirs + rng.normal(scale=0.3, size=(len(plane_scene), 3)))
    loss, pixels, coefficients, visibility = view_terms(view, scene.normals, len(scene), 1e-4)
    assert pixels > 0
    assert loss == pytest.approx(pixels - np.einsum("ni,ni->", scene.normals, coefficients), rel=1e-9)
    assert visibility.min() >= 0.0 and visibility.max() > 0.0


def test_fd_gradients_match_analytic(rng):
    n = 8
    signs = rng.normal(size=n)
    dirs = rng.normal(size=(n, 3))
    coefficients = rng.normal(size=(n, 3))
    weight = 0.3
    grad_sign, grad_dir = fd_normal_gradients(signs, dirs, coefficients, 1e-4, weight)

    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    unit = dirs / norms
    along = np.einsum("ni,ni->n", unit, coefficients)
    np.testing.assert_allclose(grad_sign, -weight * along / np.cosh(signs) ** 2, rtol=1e-5, atol=1e-10)
    expected_dir = -weight * np.tanh(signs)[:, None] * (coefficients - along[:, None] * unit) / norms
    np.testing.assert_allclose(grad_dir, expected_dir, rtol=1e-5, atol=1e-8)


def test_optimize_needs_cameras():
    with pytest.raises(NoCameras):
        optimize_normals(GaussianScene([isotropic((0.0, 0.0, 0.0))]), WrapConfig(iterations=5))


def test_zero_iterations_returns_input(plane_scene):
    scene, report = optimize_normals(plane_scene, WrapConfig(iterations=0))
    assert scene is plane_scene
    assert report.loss_trace == [] and report.total_clones == 0


def test_optimize_rotates_tilted_normals_to_surface(plane_scene):
    angle = np.radians(40.0)
    tilted = np.tile([0.0, -np.sin(angle), np.cos(angle)], (len(plane_scene), 1))
    start = plane_scene.with_normals(plane_scene.normal_signs, tilted)
    config = WrapConfig(
        iterations=30, densify=False, views_per_step=len(plane_scene.cameras),
        loss_weight=1.0, dir_learning_rate=0.1,
    )
    result, report = optimize_normals(start, config, seed=7)
    assert len(result) == len(start)
    np.testing.assert_array_equal(result.means, start.means)
    np.testing.assert_array_equal(result.scales, start.scales)
    np.testing.assert_array_equal(result.rotations, start.rotations)
    np.testing.assert_array_equal(result.opacities, start.opacities)
    np.testing.assert_array_equal(result.colors, start.colors)
    assert len(report.loss_trace) == 30
    assert report.loss_trace[-1] < report.loss_trace[0]
    assert _angles_to_up(result).mean() < 10.0
    assert report.errors.shape == (len(result),)


def test_optimize_is_deterministic(plane_scene):
    config = WrapConfig(iterations=5, densify=False, views_per_step=2)
    first, first_report = optimize_normals(plane_scene, config, seed=11)
    second, second_report = optimize_normals(plane_scene, config, seed=11)
    np.testing.assert_array_equal(first.normals, second.normals)
    assert first_report.loss_trace == second_report.loss_trace


@pytest.mark.slow
def test_densify_repairs_flipped_plane(plane_scene):
    flipped = plane_scene.with_normals(-plane_scene.normal_signs, plane_scene.normal_dirs)
    config = WrapConfig(iterations=60, densify_every=25, densify_fraction=0.5)
    result, report = optimize_normals(flipped, config, seed=3)
    assert report.clones_added == {25: 50, 50: 75}
    assert len(result) == 225
    assert report.loss_trace[-1] < 0.5 * report.loss_trace[0]


def _two_camera_plane():
    gaussians, _ = plane_gaussians(opacity=0.95, half_extent=0.8)
    front = PinholeCamera.look_at((0.0, 0.0, 3.0), (0.0, 0.0, 0.0), width=16, height=16, fov_degrees=20.0)
    behind = PinholeCamera.look_at((0.0, 0.0, -3.0), (0.0, 0.0, 0.0), width=16, height=16, fov_degrees=20.0)
    return GaussianScene(gaussians, [front, behind])


def _view_loss(scene: GaussianScene, camera: PinholeCamera) -> float:
    loss, pixels, _, _ = view_terms(build_view(scene, camera), scene.normals, len(scene), 1e-4)
    return loss / pixels


def test_flipping_every_sign_mirrors_pixel_loss(plane_scene, rng):
    camera = plane_scene.cameras[0]
    signs = rng.uniform(-3.0, 3.0, size=len(plane_scene))
    scene = plane_scene.with_normals(signs, plane_scene.normal_dirs)
    flipped = plane_scene.with_normals(-signs, plane_scene.normal_dirs)
    maps, flipped_maps = render_maps(scene, camera), render_maps(flipped, camera)
    pseudo = depth_to_pseudo_normals(maps.depth, camera)

    loss_map, contributing = alignment_loss_map(maps.normal, pseudo)
    flipped_loss_map, _ = alignment_loss_map(flipped_maps.normal, pseudo)
    antipodal = contributing & np.all(np.abs(maps.normal + flipped_maps.normal) < 1e-12, axis=-1)
    assert antipodal.sum() > 0.5 * contributing.sum()
    np.testing.assert_allclose(flipped_loss_map[antipodal], 2.0 - loss_map[antipodal], atol=1e-12)


def test_fd_gradients_stable_under_step_halving(plane_scene, rng):
    view = build_view(plane_scene, plane_scene.cameras[0])
    signs = rng.uniform(-2.0, 2.0, size=len(plane_scene))
    dirs = plane_scene.normal_dirs + rng.normal(scale=0.3, size=(len(plane_scene), 3))
    scene = plane_scene.with_normals(signs, dirs)
    _, _, coefficients, visibility = view_terms(view, scene.normals, len(scene), 1e-4)
    seen = visibility > 1e-4
    assert seen.sum() > 10

    step = WrapConfig().fd_step
    coarse, _ = fd_normal_gradients(signs[seen], dirs[seen], coefficients[seen], step)
    fine, _ = fd_normal_gradients(signs[seen], dirs[seen], coefficients[seen], step / 2)
    np.testing.assert_allclose(fine, coarse, rtol=0.1, atol=1e-9)


def test_divergence_reference_uses_chosen_views():
    losses = np.array([10.0, 150.0, 1.0, 0.0])
    pixels = np.array([100, 100, 100, 0])
    assert divergence_reference(losses, pixels, np.array([0])) == pytest.approx(0.1)
    assert divergence_reference(losses, pixels, np.array([1])) == pytest.approx(1.5)
    assert divergence_reference(losses, pixels, np.array([0, 1])) == pytest.approx(0.8)
    assert divergence_reference(losses, pixels, np.array([2])) == DIVERGENCE_FLOOR
    assert divergence_reference(losses, pixels, np.array([3])) == DIVERGENCE_FLOOR


def test_flipping_all_normals_mid_run_diverges(plane_scene, monkeypatch):
    def flip_everything(signs, dirs, coefficients, step, loss_weight=1.0):
        return np.full(len(signs), 1000.0), np.zeros_like(dirs)

    monkeypatch.setattr("gwrap.services.wrap.optimizer.fd_normal_gradients", flip_everything)
    config = WrapConfig(iterations=5, densify=False, views_per_step=len(plane_scene.cameras))
    with pytest.raises(Diverged) as info:
        optimize_normals(plane_scene, config, seed=2)
    assert info.value.context["iteration"] == 1


@pytest.mark.slow
def test_random_sphere_orientations_turn_outward(sphere_scene, rng):
    n = len(sphere_scene)
    start = sphere_scene.with_normals(rng.normal(size=n), rng.normal(size=(n, 3)))
    config = WrapConfig(
        iterations=200, densify=False, views_per_step=len(sphere_scene.cameras),
        learning_rate=0.5, dir_learning_rate=0.1, loss_weight=1.0,
    )
    result, _ = optimize_normals(start, config, seed=5)

    visibility = np.zeros(n)
    for camera in result.cameras:
        _, _, _, vis = view_terms(build_view(result, camera), result.normals, n, 1e-4)
        visibility += vis
    visible = visibility > config.weight_floor
    outward = np.einsum("ni,ni->n", result.normals, result.means) > 0.0
    assert visible.sum() > n // 2
    assert outward[visible].mean() >= 0.9


@pytest.mark.slow
def test_densify_repairs_hidden_side_of_plane():
    scene = _two_camera_plane()
    behind = scene.cameras[1]
    before = _view_loss(scene, behind)
    assert before > 1.5

    config = WrapConfig(iterations=40, densify_every=20, densify_fraction=0.5, views_per_step=2)
    result, report = optimize_normals(scene, config, seed=1)
    assert list(report.clones_added) == [20]
    assert _view_loss(result, behind) < 0.5 * before


def test_report_frame_and_csv(tmp_path):
    report = WrapReport(loss_trace=[1.0, 0.5, 0.25], clones_added={1: 3})
    frame = report.to_frame()
    assert frame["clones_added"].tolist() == [0, 3, 0]
    path = tmp_path / "report.csv"
    report.to_csv(path)
    loaded = pd.read_csv(path)
    assert list(loaded.columns) == ["iteration", "loss", "clones_added"]
    assert loaded["loss"].tolist() == [1.0, 0.5, 0.25]
