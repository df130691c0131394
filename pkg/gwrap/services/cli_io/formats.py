"""Mesh, point-cloud, table and result files."""
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd
import trimesh
from pydantic import BaseModel

from gwrap.api.models import FieldSampleRow
from gwrap.services.core import TriangleMesh
from gwrap.services.errors import BadParams, ParseError
from gwrap.services.fields import FieldSample

logger = logging.getLogger(__name__)

MESH_TYPES = {".obj": "obj", ".ply": "ply"}
RAW_SUFFIXES = (".raw", ".bin", ".f32")

PathLike = Union[str, Path]


def _mesh_type(path: Path) -> str:
    file_type = MESH_TYPES.get(path.suffix.lower())
    if file_type is None:
        raise BadParams(f"unsupported mesh format '{path.suffix}', use .obj or .ply")
    return file_type


def save_mesh(mesh: TriangleMesh, path: PathLike) -> None:
    """Write a mesh as ASCII OBJ or binary PLY, chosen by suffix."""
    path = Path(path)
    file_type = _mesh_type(path)
    tm = mesh.to_trimesh()
    if file_type == "ply":
        tm.export(str(path), file_type="ply", encoding="binary")
    else:
        tm.export(str(path), file_type="obj", include_normals=False, include_texture=False)
    logger.info(f"Wrote mesh with {len(mesh.vertices)} vertices and {len(mesh.faces)} faces to {path}")


def load_mesh(path: PathLike) -> TriangleMesh:
    path = Path(path)
    _mesh_type(path)
    if not path.exists():
        raise ParseError(f"mesh file {path} does not exist")
    try:
        tm = trimesh.load(str(path), force="mesh", process=False)
    except Exception as exc:
        raise ParseError(f"could not read mesh {path}: {exc}")
    return TriangleMesh.from_trimesh(tm)


def save_cloud(points: np.ndarray, path: PathLike) -> None:
    """Write points as a binary PLY vertex list."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    trimesh.PointCloud(points).export(str(path), file_type="ply", encoding="binary")
    logger.info(f"Wrote {len(points)} points to {path}")


def load_cloud(path: PathLike) -> np.ndarray:
    """Vertices of a PLY point cloud (or of a PLY/OBJ mesh)."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"point cloud file {path} does not exist")
    try:
        loaded = trimesh.load(str(path), process=False)
    except Exception as exc:
        raise ParseError(f"could not read point cloud {path}: {exc}")
    vertices = getattr(loaded, "vertices", None)
    if vertices is None:
        raise ParseError(f"{path} holds no vertices")
    return np.asarray(vertices, dtype=float).reshape(-1, 3)


def write_json(result: BaseModel, path: PathLike) -> None:
    Path(path).write_text(result.model_dump_json() + "\n", encoding="utf-8")
    logger.info(f"Wrote {type(result).__name__} to {path}")


def read_points_file(path: PathLike) -> np.ndarray:
    """Query points from a CSV with x,y,z columns, a whitespace table or a PLY."""
    path = Path(path)
    if path.suffix.lower() == ".ply":
        return load_cloud(path)
    if not path.exists():
        raise ParseError(f"points file {path} does not exist")
    try:
        frame = pd.read_csv(path, sep=None, engine="python")
    except Exception as exc:
        raise ParseError(f"could not read points file {path}: {exc}")
    if {"x", "y", "z"} <= set(frame.columns):
        frame = frame[["x", "y", "z"]]
    elif frame.shape[1] == 3:
        # headerless table: pandas took the first row as column names
        frame = pd.read_csv(path, sep=None, engine="python", header=None)
    else:
        raise ParseError(f"{path} needs x,y,z columns")
    values = frame.to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise ParseError(f"{path} contains non-finite coordinates")
    return values


def grid_points(lo: np.ndarray, hi: np.ndarray, counts) -> np.ndarray:
    """Regular grid of NX x NY x NZ points spanning [lo, hi], x varying slowest."""
    axes = [np.linspace(l, h, int(c)) for l, h, c in zip(lo, hi, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def field_table(points: np.ndarray, samples: List[FieldSample]) -> pd.DataFrame:
    rows = [
        FieldSampleRow(
            x=p[0], y=p[1], z=p[2], vacancy=s.vacancy, occupancy=s.occupancy,
            vx=s.vector[0], vy=s.vector[1], vz=s.vector[2],
            nx=s.normal[0], ny=s.normal[1], nz=s.normal[2],
            support_count=s.support_count,
        ).model_dump()
        for p, s in zip(np.asarray(points, dtype=float), samples)
    ]
    return pd.DataFrame(rows, columns=list(FieldSampleRow.model_fields))


def write_field_table(frame: pd.DataFrame, path: PathLike) -> None:
    """Write a field table as CSV, or as little-endian float32 rows for raw suffixes."""
    path = Path(path)
    if path.suffix.lower() in RAW_SUFFIXES:
        frame.to_numpy(dtype="<f4").tofile(path)
    else:
        frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(frame)} field samples to {path}")

