import logging

import numpy as np
import pytest
from pydantic import ValidationError

from gwrap.api.models import FixtureKind, FixtureParams, RunConfig
from gwrap.services.cli_io import (
    config_from_dict,
    dump_config,
    field_table,
    format_scene,
    grid_points,
    load_cloud,
    load_config,
    load_mesh,
    load_scene,
    make_fixture,
    parse_scene,
    read_points_file,
    save_cloud,
    save_mesh,
    save_scene,
    surface_points,
    write_field_table,
)
from gwrap.services.core import TriangleMesh
from gwrap.services.errors import BadParams, ConfigError, ParseError, VersionMismatch
from gwrap.services.fields import field_samples

GAUSSIAN_LINE = "g 0 0 0  0.1 0.1 0.1  1 0 0 0  0.5  2  0 0 1  0.5 0.5 0.5"
CAMERA_LINE = "c 10 10 4 4 8 8  1 0 0 0  0 1 0 0  0 0 1 -3"


def _scene_text(*gaussian_lines, cameras=(CAMERA_LINE,), version=1):
    lines = [f"gwrap-scene {version}", f"gaussians {len(gaussian_lines)}", *gaussian_lines]
    if cameras is not None:
        lines += [f"cameras {len(cameras)}", *cameras]
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="module")
def small_scene():
    return make_fixture(FixtureKind.sphere_shell, FixtureParams(n=20, n_cams=2, resolution=8))


def test_scene_file_round_trip(tmp_path, small_scene):
    path = tmp_path / "scene.txt"
    save_scene(small_scene, path)
    loaded = load_scene(path)
    assert loaded.gaussians == small_scene.gaussians
    assert format_scene(loaded) == path.read_text()
    for a, b in zip(loaded.cameras, small_scene.cameras):
        np.testing.assert_array_equal(a.world_from_camera, b.world_from_camera)
        assert (a.fx, a.width, a.height) == (b.fx, b.width, b.height)


def test_parse_ignores_comments_and_blank_lines():
    text = "# exported scene\n\n" + _scene_text(GAUSSIAN_LINE).replace("gaussians 1\n", "gaussians 1\n\n# first\n")
    scene = parse_scene(text)
    assert len(scene) == 1 and len(scene.cameras) == 1
    np.testing.assert_allclose(scene.cameras[0].center, [0.0, 0.0, -3.0])


def test_parse_reports_record_of_short_line():
    text = _scene_text(GAUSSIAN_LINE, "g 1 2 3 4 5")
    with pytest.raises(ParseError) as info:
        parse_scene(text)
    assert info.value.record == 1
    assert info.value.line == 4
    assert info.value.to_dict()["context"]["record"] == 1


def test_parse_reports_field_of_bad_value():
    bad = GAUSSIAN_LINE.replace("0.1 0.1 0.1", "0.1 -0.1 0.1")
    with pytest.raises(ParseError) as info:
        parse_scene(_scene_text(GAUSSIAN_LINE, GAUSSIAN_LINE, bad))
    assert info.value.record == 2
    assert info.value.field == "scales"

    with pytest.raises(ParseError) as info:
        parse_scene(_scene_text(GAUSSIAN_LINE.replace("0.5  2", "half  2")))
    assert info.value.field == "opacity"


def test_parse_rejects_opacity_above_alpha_max():
    too_opaque = GAUSSIAN_LINE.replace("0.5  2", "0.9995  2")
    with pytest.raises(ParseError) as info:
        parse_scene(_scene_text(GAUSSIAN_LINE, too_opaque))
    assert info.value.record == 1


def test_parse_header_errors():
    with pytest.raises(VersionMismatch):
        parse_scene(_scene_text(GAUSSIAN_LINE, version=2))
    with pytest.raises(ParseError):
        parse_scene("")
    with pytest.raises(ParseError):
        parse_scene("not-a-scene 1\n")
    with pytest.raises(ParseError):
        parse_scene(_scene_text(GAUSSIAN_LINE) + "extra 1\n")
    with pytest.raises(ParseError):
        parse_scene(_scene_text(GAUSSIAN_LINE, cameras=("c 10 10 4 4 8.5 8  1 0 0 0  0 1 0 0  0 0 1 -3",)))


def test_missing_camera_block_warns(caplog):
    with caplog.at_level(logging.WARNING):
        scene = parse_scene(_scene_text(GAUSSIAN_LINE, cameras=None))
    assert scene.cameras == ()
    assert "no camera block" in caplog.text


def test_load_scene_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_scene(tmp_path / "absent.txt")


def test_config_defaults_and_overrides(tmp_path):
    assert load_config() == RunConfig()
    path = tmp_path / "run.yaml"
    path.write_text("seed: 7\nwrap:\n  iterations: 10\nfields:\n  k_neighbors: 8\n")
    config = load_config(path)
    assert config.seed == 7
    assert config.wrap.iterations == 10
    assert config.fields.k_neighbors == 8
    assert config.pam == RunConfig().pam


def test_config_dump_reloads(tmp_path):
    config = config_from_dict({"seed": 3, "pam": {"samples": 500}})
    path = tmp_path / "dumped.yaml"
    text = dump_config(config, path)
    assert "samples: 500" in text
    assert load_config(path) == config


@pytest.mark.parametrize(
    "text",
    ["wrap:\n  iteratons: 3\n", "seed: [1, 2\n", "- 1\n- 2\n", "wrap:\n  iterations: -1\n"],
    ids=["unknown-key", "bad-yaml", "not-a-mapping", "out-of-range"],
)
def test_config_errors(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_error_names_the_key():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"render": {"early_stop": 0.1}})
    assert info.value.context["key"] == "render.early_stop"


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


def test_fixture_params_parse():
    params = FixtureParams.parse("n=10, radius=2.5,isotropic=true")
    assert (params.n, params.radius, params.isotropic) == (10, 2.5, True)
    assert FixtureParams.parse(None) == FixtureParams()
    with pytest.raises(ValidationError):
        FixtureParams.parse("radius=-1")
    with pytest.raises(ValidationError):
        FixtureParams.parse("unknown=1")


@pytest.mark.parametrize(
    "kind, params, count",
    [
        (FixtureKind.sphere_shell, FixtureParams(n=50, n_cams=3), 50),
        (FixtureKind.plane_patch, FixtureParams(n=100, n_cams=3), 100),
        (FixtureKind.two_plane, FixtureParams(n=200, n_cams=3), 200),
        (FixtureKind.cube_shell, FixtureParams(n=600, n_cams=3), 600),
    ],
)
def test_fixtures_build_deterministically(kind, params, count):
    scene = make_fixture(kind, params)
    assert len(scene) == count
    assert len(scene.cameras) == 3
    assert format_scene(scene) == format_scene(make_fixture(kind, params))


def test_sphere_fixture_geometry():
    scene = make_fixture(FixtureKind.sphere_shell, FixtureParams(radius=2.0, n=100, n_cams=5))
    np.testing.assert_allclose(np.linalg.norm(scene.means, axis=1), 2.0)
    radial = scene.means / 2.0
    np.testing.assert_allclose(np.einsum("ij,ij->i", scene.normals, radial), np.tanh(5.0))
    np.testing.assert_allclose(np.linalg.norm(scene.camera_centers, axis=1), 6.0)


def test_plane_fixtures_geometry():
    plane = make_fixture(FixtureKind.plane_patch, FixtureParams(n=100, n_cams=4))
    assert np.all(plane.means[:, 2] == 0.0)
    assert np.all(plane.camera_centers[:, 2] > 0.0)
    two = make_fixture(FixtureKind.two_plane, FixtureParams(n=200, n_cams=4, gap=0.4))
    top = two.means[:, 2] > 0.0
    np.testing.assert_allclose(np.abs(two.means[:, 2]), 0.2)
    assert np.all(two.normals[top, 2] > 0.0) and np.all(two.normals[~top, 2] < 0.0)


def test_surface_points_lie_on_surfaces():
    params = FixtureParams(radius=1.5, extent=2.0, gap=0.6)
    sphere = surface_points(FixtureKind.sphere_shell, params, 500)
    np.testing.assert_allclose(np.linalg.norm(sphere, axis=1), 1.5)
    plane = surface_points(FixtureKind.plane_patch, params, 500)
    assert np.all(plane[:, 2] == 0.0) and np.abs(plane[:, :2]).max() <= 2.0
    two = surface_points(FixtureKind.two_plane, params, 500)
    np.testing.assert_allclose(np.abs(two[:, 2]), 0.3)
    cube = surface_points(FixtureKind.cube_shell, params, 500)
    np.testing.assert_allclose(np.abs(cube).max(axis=1), 1.5)
    np.testing.assert_array_equal(sphere, surface_points(FixtureKind.sphere_shell, params, 500))


def test_unknown_fixture_kind():
    with pytest.raises(BadParams):
        make_fixture("torus")


@pytest.mark.parametrize("suffix", [".obj", ".ply"])
def test_mesh_files(tmp_path, suffix):
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    mesh = TriangleMesh(vertices, [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    path = tmp_path / f"mesh{suffix}"
    save_mesh(mesh, path)
    loaded = load_mesh(path)
    assert loaded.faces.shape == mesh.faces.shape
    np.testing.assert_allclose(loaded.corners, mesh.corners)


def test_mesh_file_errors(tmp_path):
    with pytest.raises(BadParams):
        save_mesh(TriangleMesh.empty(), tmp_path / "mesh.stl")
    with pytest.raises(ParseError):
        load_mesh(tmp_path / "absent.ply")


def test_cloud_files(tmp_path, rng):
    points = rng.normal(size=(100, 3))
    path = tmp_path / "cloud.ply"
    save_cloud(points, path)
    np.testing.assert_allclose(load_cloud(path), points, rtol=1e-6, atol=1e-6)
    with pytest.raises(ParseError):
        load_cloud(tmp_path / "absent.ply")


def test_read_points_file(tmp_path):
    with_header = tmp_path / "with_header.csv"
    with_header.write_text("x,y,z\n1,2,3\n4,5,6\n")
    np.testing.assert_array_equal(read_points_file(with_header), [[1, 2, 3], [4, 5, 6]])

    headerless = tmp_path / "headerless.csv"
    headerless.write_text("1,2,3\n4,5,6\n")
    np.testing.assert_array_equal(read_points_file(headerless), [[1, 2, 3], [4, 5, 6]])

    wrong = tmp_path / "wrong.csv"
    wrong.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        read_points_file(wrong)


def test_grid_points_order():
    points = grid_points(np.zeros(3), np.ones(3), (2, 3, 4))
    assert points.shape == (24, 3)
    assert np.all(points[:12, 0] == 0.0) and np.all(points[12:, 0] == 1.0)
    np.testing.assert_array_equal(points[:4, 2], [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])


def test_field_table_files(tmp_path, small_scene):
    points = np.array([[0.0, 0.0, 0.0], [1.02, 0.0, 0.0], [3.0, 0.0, 0.0]])
    frame = field_table(points, field_samples(small_scene, points, k=8))
    assert list(frame.columns) == [
        "x", "y", "z", "vacancy", "occupancy", "vx", "vy", "vz", "nx", "ny", "nz", "support_count",
    ]
    np.testing.assert_allclose(frame["vacancy"] + frame["occupancy"], 1.0)

    csv_path = tmp_path / "fields.csv"
    write_field_table(frame, csv_path)
    assert csv_path.read_text().splitlines()[0].startswith("x,y,z,vacancy")

    raw_path = tmp_path / "fields.f32"
    write_field_table(frame, raw_path)
    raw = np.fromfile(raw_path, dtype="<f4").reshape(3, 12)
    np.testing.assert_allclose(raw[:, :3], points)
