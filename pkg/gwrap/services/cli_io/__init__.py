"""File formats and fixtures package.

This package provides the versioned scene text format, YAML run
configuration, mesh/point-cloud/table files and the synthetic wrapped-scene
generators used by the CLI and the tests.
"""

from .config import config_from_dict, dump_config, load_config
from .fixtures import fibonacci_sphere, make_fixture, surface_points, surrounding_cameras
from .formats import (
    field_table,
    grid_points,
    load_cloud,
    load_mesh,
    read_points_file,
    save_cloud,
    save_mesh,
    write_field_table,
    write_json,
)
from .scene_file import format_scene, load_scene, parse_scene, save_scene

__all__ = [
    "load_scene",
    "save_scene",
    "parse_scene",
    "format_scene",
    "load_config",
    "dump_config",
    "config_from_dict",
    "make_fixture",
    "surface_points",
    "fibonacci_sphere",
    "surrounding_cameras",
    "save_mesh",
    "load_mesh",
    "save_cloud",
    "load_cloud",
    "read_points_file",
    "grid_points",
    "field_table",
    "write_field_table",
    "write_json",
]
