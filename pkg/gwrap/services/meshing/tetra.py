"""Pivot-based marching tetrahedra.

Occupancy is sampled at the Delaunay pivots, the 0.5 level set is
extracted tet by tet, and each surface vertex is then bisected along the
tet edge it came from until the occupancy there is 0.5.
"""
import time
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from gwrap.api.models import FieldsConfig, MtetConfig
from gwrap.services.core import GaussianScene, TriangleMesh
from gwrap.services.errors import BadParams
from gwrap.services.fields import occupancy_batch
from .delaunay import TetMesh, delaunay_tetrahedralize
from .pivots import generate_pivots

logger = logging.getLogger(__name__)

ISO = 0.5
DEFAULT_MTET = MtetConfig()


@dataclass(frozen=True)
class IsoSurfaceMesh(TriangleMesh):
    """Triangle mesh whose vertices remember the tet edge they lie on.

    Attributes:
        edge_points: (V, 2, 3) low-value and high-value endpoint of each vertex's edge
    """

    edge_points: Optional[np.ndarray] = None

    def __post_init__(self):
        super().__post_init__()
        if self.edge_points is not None:
            edge_points = np.asarray(self.edge_points, dtype=float).reshape(-1, 2, 3)
            if len(edge_points) != len(self.vertices):
                raise BadParams("edge_points must match the vertex count", vertices=len(self.vertices))
            edge_points.setflags(write=False)
            object.__setattr__(self, "edge_points", edge_points)

    def plain(self) -> TriangleMesh:
        return TriangleMesh(self.vertices, self.faces)


def _tet_edges(order: np.ndarray, inside_count: np.ndarray):
    """Crossing edges (local vertex slots) of every cut tet, as triangles.

    ``order`` lists each tet's slots with the above-iso ones first.

    Returns:
        (tet index per triangle, (F, 3, 2) local edge endpoints)
    """
    tets, edges = [], []
    one = np.flatnonzero(inside_count == 1)
    if len(one):
        o = order[one]
        tets.append(one)
        edges.append(np.stack([o[:, [0, 1]], o[:, [0, 2]], o[:, [0, 3]]], axis=1))
    three = np.flatnonzero(inside_count == 3)
    if len(three):
        o = order[three]
        tets.append(three)
        edges.append(np.stack([o[:, [3, 0]], o[:, [3, 1]], o[:, [3, 2]]], axis=1))
    two = np.flatnonzero(inside_count == 2)
    if len(two):
        o = order[two]
        quad = [o[:, [0, 2]], o[:, [0, 3]], o[:, [1, 3]], o[:, [1, 2]]]
        tets.extend([two, two])
        edges.append(np.stack([quad[0], quad[1], quad[2]], axis=1))
        edges.append(np.stack([quad[0], quad[2], quad[3]], axis=1))
    if not tets:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 3, 2), dtype=np.int64)
    return np.concatenate(tets), np.concatenate(edges)


def marching_tetrahedra(tets: TetMesh, values: np.ndarray, iso: float = ISO) -> IsoSurfaceMesh:
    """Level set of per-vertex values over a tetrahedral mesh.

    Vertices above ``iso`` count as inside. Crossing vertices are linearly
    interpolated and shared between tets through their edge key, and every
    triangle faces the low-value side.

    Args:
        tets: Tetrahedral mesh
        values: (V,) per-vertex values
        iso: Level to extract

    Returns:
        IsoSurfaceMesh carrying the bracketing edge of every vertex
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (len(tets.vertices),):
        raise BadParams(f"expected {len(tets.vertices)} values, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise BadParams("marching tetrahedra values must be finite")
    if len(tets) == 0:
        return IsoSurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 2, 3)))

    inside = values[tets.tets] > iso
    order = np.argsort(~inside, axis=1, kind="stable")
    tet_of, local = _tet_edges(order, inside.sum(axis=1))
    if len(tet_of) == 0:
        return IsoSurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 2, 3)))

    ends = np.take_along_axis(tets.tets[tet_of], local.reshape(len(local), 6), axis=1).reshape(-1, 3, 2)
    lo_end = np.minimum(ends[..., 0], ends[..., 1])
    hi_end = np.maximum(ends[..., 0], ends[..., 1])
    keys = lo_end * len(tets.vertices) + hi_end
    unique_keys, faces = np.unique(keys.ravel(), return_inverse=True)
    faces = faces.reshape(-1, 3)

    a = unique_keys // len(tets.vertices)
    b = unique_keys % len(tets.vertices)
    va, vb = values[a], values[b]
    low = np.where(va <= vb, a, b)
    high = np.where(va <= vb, b, a)
    frac = (iso - values[low]) / (values[high] - values[low])
    p_low, p_high = tets.vertices[low], tets.vertices[high]
    vertices = p_low + frac[:, None] * (p_high - p_low)

    corners = vertices[faces]
    normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    tet_points = tets.vertices[tets.tets[tet_of]]
    tet_inside = inside[tet_of]
    count_in = tet_inside.sum(axis=1, keepdims=True)
    inside_centroid = (tet_points * tet_inside[..., None]).sum(axis=1) / count_in
    outside_centroid = (tet_points * ~tet_inside[..., None]).sum(axis=1) / (4 - count_in)
    flip = np.einsum("fi,fi->f", normals, outside_centroid - inside_centroid) < 0.0
    faces[flip] = faces[flip][:, [0, 2, 1]]

    return IsoSurfaceMesh(vertices, faces, np.stack([p_low, p_high], axis=1))


def refine_to_isosurface(
    mesh: IsoSurfaceMesh,
    scene: GaussianScene,
    config: Optional[MtetConfig] = None,
    fields: Optional[FieldsConfig] = None,
) -> IsoSurfaceMesh:
    """Bisect every vertex along its edge until its occupancy is 0.5.

    The search starts at the current vertex position and stops once
    |occupancy - 0.5| < refine_tol or after refine_iterations bisections.
    Faces are left untouched.

    Raises:
        BadParams: If the mesh does not carry edge provenance
    """
    config = config or DEFAULT_MTET
    if mesh.edge_points is None:
        raise BadParams("refinement needs the tet edge of every vertex")
    if len(mesh.vertices) == 0:
        return mesh

    low, high = mesh.edge_points[:, 0], mesh.edge_points[:, 1]
    span = high - low
    length_sq = np.einsum("vi,vi->v", span, span)
    s = np.clip(
        np.einsum("vi,vi->v", mesh.vertices - low, span) / np.where(length_sq > 0.0, length_sq, 1.0), 0.0, 1.0
    )
    s_low, s_high = np.zeros_like(s), np.ones_like(s)
    active = np.flatnonzero(length_sq > 0.0)

    for _ in range(config.refine_iterations + 1):
        if len(active) == 0:
            break
        occupancy = occupancy_batch(scene, low[active] + s[active, None] * span[active], fields)
        converged = np.abs(occupancy - ISO) < config.refine_tol
        below = occupancy < ISO
        s_low[active] = np.where(below, s[active], s_low[active])
        s_high[active] = np.where(below, s_high[active], s[active])
        active = active[~converged]
        s[active] = 0.5 * (s_low[active] + s_high[active])

    vertices = np.where((length_sq > 0.0)[:, None], low + s[:, None] * span, mesh.vertices)
    if len(active):
        logger.debug(f"{len(active)} of {len(vertices)} vertices stopped at the bisection limit")
    return IsoSurfaceMesh(vertices, mesh.faces, mesh.edge_points)


def mesh_mtet(
    scene: GaussianScene,
    config: Optional[MtetConfig] = None,
    fields: Optional[FieldsConfig] = None,
) -> TriangleMesh:
    """Extract the 0.5 occupancy surface through pivot-based marching tetrahedra.

    Args:
        scene: Scene with cameras
        config: Pivot layout and refinement settings
        fields: Field settings for the vacancy queries

    Returns:
        Refined and cleaned triangle mesh, outward oriented

    Raises:
        NoCameras: If the scene has no cameras
        DegenerateInput: If the pivots span no volume
    """
    config = config or DEFAULT_MTET
    scene.require_cameras()
    start_time = time.time()

    pivots = generate_pivots(scene, config.pivot_mode)
    tets = delaunay_tetrahedralize(pivots.points)
    occupancy = occupancy_batch(scene, tets.vertices, fields)
    surface = marching_tetrahedra(tets, occupancy, ISO)
    mesh = refine_to_isosurface(surface, scene, config, fields).plain().cleanup()

    logger.info(
        f"MTet mesh: {len(pivots)} pivots, {len(tets)} tets, {len(mesh.vertices)} vertices, "
        f"{len(mesh.faces)} faces completed in {time.time() - start_time:.2f} seconds"
    )
    return mesh
