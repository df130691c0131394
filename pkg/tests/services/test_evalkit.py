import logging

import numpy as np
import pytest
import trimesh
from scipy.spatial.distance import cdist
from scipy.stats import chisquare

from gwrap.api.models import Box, EvalConfig, FixtureKind, MtetConfig, PivotMode, Protocol
from gwrap.services.cli_io import surface_points
from gwrap.services.core import PinholeCamera, TriangleMesh
from gwrap.services.errors import BadParams, CropEmpty, EmptyCloud, NoCameras
from gwrap.services.evalkit import (
    PointCloud,
    TriangleBVH,
    bias_experiment,
    chamfer,
    default_tau,
    evaluate_mesh,
    f1_at,
    legacy_point_cloud,
    uniform_sample,
    virtual_scan,
)
from gwrap.services.meshing import mesh_mtet

UPPER = Box(lo=(-2.0, -2.0, 0.5), hi=(2.0, 2.0, 2.0))


@pytest.fixture(scope="module")
def cube() -> TriangleMesh:
    return TriangleMesh.from_trimesh(trimesh.creation.box(extents=(2.0, 2.0, 2.0)))


@pytest.fixture(scope="module")
def cube_gt(cube) -> PointCloud:
    return uniform_sample(cube, 20000, seed=99)


def _face_of(points: np.ndarray) -> np.ndarray:
    axis = np.argmax(np.abs(points), axis=1)
    positive = points[np.arange(len(points)), axis] > 0.0
    return 2 * axis + positive


def test_uniform_sample_on_cube_faces(cube):
    cloud = uniform_sample(cube, 60000, seed=0)
    assert len(cloud) == 60000
    np.testing.assert_allclose(np.abs(cloud.points).max(axis=1), 1.0, atol=1e-12)
    counts = np.bincount(_face_of(cloud.points), minlength=6)
    assert chisquare(counts).pvalue > 1e-3


def test_uniform_sample_within_triangle():
    mesh = TriangleMesh(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), [[0, 1, 2]])
    points = uniform_sample(mesh, 20000, seed=3).points
    assert points[:, :2].min() >= 0.0 and points[:, :2].sum(axis=1).max() <= 1.0 + 1e-12
    np.testing.assert_allclose(points.mean(axis=0), [1.0 / 3.0, 1.0 / 3.0, 0.0], atol=0.01)


def test_uniform_sample_is_seeded(cube):
    first = uniform_sample(cube, 500, seed=4).points
    np.testing.assert_array_equal(first, uniform_sample(cube, 500, seed=4).points)
    assert not np.array_equal(first, uniform_sample(cube, 500, seed=5).points)


def test_uniform_sample_with_crop(cube):
    cloud = uniform_sample(cube, 1000, UPPER, seed=1)
    assert len(cloud) == 1000
    assert cloud.crop == UPPER
    assert UPPER.contains(cloud.points).all()


def test_uniform_sample_draw_budget(cube, caplog):
    thin = Box(lo=(-2.0, -2.0, 0.9), hi=(2.0, 2.0, 2.0))
    with caplog.at_level(logging.WARNING):
        cloud = uniform_sample(cube, 1000, thin, seed=1, oversample_limit=1)
    assert 100 < len(cloud) < 300
    assert "after 1000 draws" in caplog.text

    far = Box(lo=(5.0, 5.0, 5.0), hi=(6.0, 6.0, 6.0))
    with pytest.raises(CropEmpty):
        uniform_sample(cube, 10, far, oversample_limit=2)


def test_uniform_sample_errors(cube):
    with pytest.raises(BadParams):
        uniform_sample(TriangleMesh.empty(), 10)
    with pytest.raises(BadParams):
        uniform_sample(cube, 0)


def test_legacy_cloud_counts(cube):
    assert len(legacy_point_cloud(cube)) == 8 + 12
    assert len(legacy_point_cloud(cube, UPPER)) == 4 + 2
    assert len(legacy_point_cloud(cube.subdivide_midpoint())) == 26 + 48
    with pytest.raises(BadParams):
        legacy_point_cloud(TriangleMesh.empty())


def test_point_cloud_invariants():
    with pytest.raises(BadParams):
        PointCloud(np.array([[0.0, np.nan, 0.0]]))
    with pytest.raises(BadParams):
        PointCloud(np.zeros((1, 3)), UPPER)
    cropped = PointCloud.cropped(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]), UPPER)
    np.testing.assert_array_equal(cropped.points, [[0.0, 0.0, 1.0]])


def test_bvh_hits_from_inside_cube(cube, rng):
    dirs = rng.normal(size=(200, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    t = TriangleBVH(cube).intersect(np.zeros((200, 3)), dirs)
    np.testing.assert_allclose(t, 1.0 / np.abs(dirs).max(axis=1), rtol=1e-9)


def test_bvh_matches_single_leaf(rng):
    sphere = TriangleMesh.from_trimesh(trimesh.creation.icosphere(subdivisions=3))
    origins = rng.normal(size=(300, 3))
    origins = 3.0 * origins / np.linalg.norm(origins, axis=1, keepdims=True)
    dirs = rng.normal(scale=0.7, size=(300, 3)) - origins
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    tree = TriangleBVH(sphere).intersect(origins, dirs)
    flat = TriangleBVH(sphere, leaf_size=len(sphere)).intersect(origins, dirs)
    np.testing.assert_allclose(tree, flat, rtol=1e-12)
    assert np.isfinite(tree).sum() > 100 and np.isinf(tree).sum() > 0


def test_bvh_rejects_empty_mesh():
    with pytest.raises(BadParams):
        TriangleBVH(TriangleMesh.empty())


def test_virtual_scan_sees_top_face(cube):
    camera = PinholeCamera.look_at((0.0, 0.0, 5.0), (0.0, 0.0, 0.0), width=16, height=16, fov_degrees=40.0)
    cloud = virtual_scan(cube, [camera])
    assert 0 < len(cloud) < 256
    np.testing.assert_allclose(cloud.points[:, 2], 1.0, atol=1e-9)
    assert np.abs(cloud.points[:, :2]).max() <= 1.0 + 1e-9
    with pytest.raises(NoCameras):
        virtual_scan(cube, [])


def test_chamfer_matches_brute_force(rng):
    a = PointCloud(rng.normal(size=(50, 3)))
    b = PointCloud(rng.normal(size=(70, 3)))
    d = cdist(a.points, b.points)
    expected = 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())
    assert chamfer(a, b) == pytest.approx(expected, rel=1e-12)
    assert chamfer(a, a) == 0.0
    with pytest.raises(EmptyCloud):
        chamfer(a, PointCloud(np.zeros((0, 3))))


def test_f1_cases():
    gt = PointCloud(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    same = f1_at(gt, gt, 0.1)
    assert (same.precision, same.recall, same.f1) == (1.0, 1.0, 1.0)

    far = f1_at(PointCloud(gt.points + 10.0), gt, 0.1)
    assert far.f1 == 0.0

    extra = PointCloud(np.vstack([gt.points, [[5.0, 5.0, 5.0]]]))
    result = f1_at(extra, gt, 0.1)
    assert result.precision == pytest.approx(0.75)
    assert result.recall == 1.0
    assert result.f1 == pytest.approx(2 * 0.75 / 1.75)

    with pytest.raises(BadParams):
        f1_at(gt, gt, 0.0)


def test_f1_threshold_is_inclusive():
    pred = PointCloud(np.array([[0.0, 0.0, 0.0]]))
    gt = PointCloud(np.array([[0.5, 0.0, 0.0]]))
    assert f1_at(pred, gt, 0.5).f1 == 1.0
    assert f1_at(pred, gt, 0.4999).f1 == 0.0


def test_default_tau():
    cloud = PointCloud(np.array([[0.0, 0.0, 0.0], [3.0, 4.0, 0.0]]))
    assert default_tau(cloud) == pytest.approx(0.05)
    crop = Box(lo=(0.0, 0.0, 0.0), hi=(6.0, 8.0, 0.0))
    assert default_tau(PointCloud.cropped(cloud.points, crop)) == pytest.approx(0.1)
    with pytest.raises(BadParams):
        default_tau(PointCloud(np.zeros((1, 3))))
    with pytest.raises(EmptyCloud):
        default_tau(PointCloud(np.zeros((0, 3))))


def test_evaluate_uniform_protocol(cube, cube_gt):
    config = EvalConfig(tau=0.05, uniform_count=20000)
    result = evaluate_mesh(cube, cube_gt, Protocol.uniform, config=config, seed=2)
    assert result.f1 > 0.98
    assert result.pred_points == 20000 and result.gt_points == len(cube_gt)
    assert result.protocol is Protocol.uniform


def test_evaluate_legacy_misses_recall(cube, cube_gt):
    result = evaluate_mesh(cube, cube_gt, Protocol.legacy, config=EvalConfig(tau=0.08))
    assert result.precision == 1.0
    assert result.recall < 0.2


def test_evaluate_virtual_scan(cube, cube_gt):
    cameras = [
        PinholeCamera.look_at(eye, (0.0, 0.0, 0.0), width=32, height=32, fov_degrees=50.0)
        for eye in [(0, 0, 5), (0, 0, -5), (5, 0, 0), (-5, 0, 0), (0, 5, 0), (0, -5, 0)]
    ]
    result = evaluate_mesh(cube, cube_gt, Protocol.virtual_scan, cameras, EvalConfig(tau=0.05))
    assert result.precision > 0.99
    with pytest.raises(NoCameras):
        evaluate_mesh(cube, cube_gt, Protocol.virtual_scan, config=EvalConfig(tau=0.05))


def test_bias_experiment_on_cube(cube, cube_gt):
    report = bias_experiment(cube, cube_gt, 0.05, seed=1, uniform_count=20000)
    assert report.legacy_points == (20, 74)
    assert report.uniform_points == (20000, 20000)
    assert report.uniform_stable
    assert abs(report.uniform_delta) < report.tolerance
    assert report.legacy_delta > 0.0


def test_bias_experiment_warns_on_open_mesh(cube, cube_gt, caplog):
    open_mesh = TriangleMesh(cube.vertices, cube.faces[2:])
    with caplog.at_level(logging.WARNING):
        bias_experiment(open_mesh, cube_gt, 0.05, uniform_count=2000)
    assert "not closed" in caplog.text


@pytest.fixture(scope="module")
def sphere_gt(sphere_params) -> PointCloud:
    return PointCloud(surface_points(FixtureKind.sphere_shell, sphere_params, 20000, seed=7))


@pytest.mark.slow
def test_bias_experiment_on_sphere_mesh(sphere_scene, sphere_gt):
    mesh = mesh_mtet(sphere_scene)
    report = bias_experiment(mesh, sphere_gt, default_tau(sphere_gt), seed=2, uniform_count=20000)
    assert report.uniform_stable
    assert report.legacy_points[1] == pytest.approx(4 * report.legacy_points[0], rel=0.1)
    assert report.legacy_delta != 0.0


@pytest.mark.slow
def test_pivot_density_moves_legacy_score_only(sphere_scene, sphere_gt):
    config = EvalConfig(uniform_count=20000)
    two = mesh_mtet(sphere_scene, MtetConfig(pivot_mode=PivotMode.two))
    dense = mesh_mtet(sphere_scene, MtetConfig(pivot_mode=PivotMode.dense))
    scores = {
        protocol: [evaluate_mesh(m, sphere_gt, protocol, config=config, seed=3).f1 for m in (two, dense)]
        for protocol in (Protocol.legacy, Protocol.uniform)
    }
    assert len(dense.faces) != len(two.faces)
    assert scores[Protocol.legacy][0] != scores[Protocol.legacy][1]
    assert abs(scores[Protocol.uniform][1] - scores[Protocol.uniform][0]) < 0.02
