"""Shared synthetic scenes."""
import numpy as np
import pytest

from gwrap.api.models import FixtureKind, FixtureParams
from gwrap.services.cli_io import make_fixture
from gwrap.services.core import GaussianScene, PinholeCamera


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def sphere_params():
    return FixtureParams(radius=1.0, n=400, n_cams=20, resolution=32)


@pytest.fixture(scope="session")
def sphere_scene(sphere_params) -> GaussianScene:
    return make_fixture(FixtureKind.sphere_shell, sphere_params)


@pytest.fixture(scope="session")
def thick_sphere_scene() -> GaussianScene:
    return make_fixture(FixtureKind.sphere_shell, FixtureParams(radius=1.0, n=400, n_cams=20, thickness=0.5, resolution=32))


@pytest.fixture(scope="session")
def plane_params():
    return FixtureParams(extent=1.0, n=100, n_cams=6, resolution=24)


@pytest.fixture(scope="session")
def plane_scene(plane_params) -> GaussianScene:
    return make_fixture(FixtureKind.plane_patch, plane_params)


@pytest.fixture
def top_camera() -> PinholeCamera:
    return PinholeCamera.look_at((0.0, 0.0, 3.0), (0.0, 0.0, 0.0), width=16, height=16, fov_degrees=40.0)


@pytest.fixture(scope="session")
def cube_scene() -> GaussianScene:
    return make_fixture(FixtureKind.cube_shell, FixtureParams(radius=1.0, n=600, n_cams=20, resolution=32))
