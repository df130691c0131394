"""Closed-manifold check for triangle meshes."""
import logging
from typing import NamedTuple, Tuple

import numpy as np

from gwrap.services.core import TriangleMesh

logger = logging.getLogger(__name__)


class WatertightReport(NamedTuple):
    is_closed_manifold: bool
    boundary_edges: int
    non_manifold_edges: int


def edge_incidence(faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unique undirected edges (E, 2), their face counts and forward traversals."""
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    directed = faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    undirected = np.sort(directed, axis=1)
    forward = (directed[:, 0] < directed[:, 1]).astype(np.int64)
    edges, inverse, counts = np.unique(undirected, axis=0, return_inverse=True, return_counts=True)
    forward_counts = np.bincount(inverse.ravel(), weights=forward, minlength=len(edges))
    return edges, counts, forward_counts


def non_manifold_edges(faces: np.ndarray) -> np.ndarray:
    """Vertex pairs (E, 2) of edges with more than two faces or inconsistent winding."""
    if len(faces) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    edges, counts, forward_counts = edge_incidence(faces)
    return edges[(counts > 2) | ((counts == 2) & (forward_counts != 1))]


def watertight_check(mesh: TriangleMesh) -> WatertightReport:
    """Edge-incidence test of a triangle mesh.

    An edge with one face is a boundary edge. An edge with more than two
    faces, or with two faces traversing it in the same direction, counts as
    non-manifold. The mesh is closed when it has faces and neither kind.
    """
    if mesh.is_empty:
        return WatertightReport(False, 0, 0)
    _, counts, _ = edge_incidence(mesh.faces)
    boundary = int((counts == 1).sum())
    non_manifold = len(non_manifold_edges(mesh.faces))
    closed = boundary == 0 and non_manifold == 0
    if not closed:
        logger.debug(f"Mesh not watertight: {boundary} boundary edges, {non_manifold} non-manifold edges")
    return WatertightReport(closed, boundary, non_manifold)
