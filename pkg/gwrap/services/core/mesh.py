"""Indexed triangle meshes."""
import logging
from dataclasses import dataclass

import numpy as np
import trimesh
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from gwrap.services.errors import BadParams

logger = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-12
WELD_DISTANCE = 1e-9


@dataclass(frozen=True)
class TriangleMesh:
    """Vertices (V, 3) float and faces (F, 3) int, counter-clockwise seen from outside."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(faces) and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise BadParams("face index out of range", vertices=len(vertices))
        vertices.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

    @classmethod
    def empty(cls) -> "TriangleMesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @classmethod
    def from_trimesh(cls, mesh: trimesh.Trimesh) -> "TriangleMesh":
        return cls(np.asarray(mesh.vertices), np.asarray(mesh.faces))

    def __len__(self) -> int:
        return len(self.faces)

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    @property
    def corners(self) -> np.ndarray:
        """(F, 3, 3) corner positions."""
        return self.vertices[self.faces]

    def face_cross(self) -> np.ndarray:
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross(), axis=1)

    def face_normals(self) -> np.ndarray:
        cross = self.face_cross()
        norms = np.linalg.norm(cross, axis=1, keepdims=True)
        return np.divide(cross, norms, out=np.zeros_like(cross), where=norms > 0)

    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    def edge_lengths(self) -> np.ndarray:
        """Length of every unique undirected edge."""
        edges = np.sort(self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        edges = np.unique(edges, axis=0)
        return np.linalg.norm(self.vertices[edges[:, 0]] - self.vertices[edges[:, 1]], axis=1)

    def total_area(self) -> float:
        return float(self.areas().sum())

    def cleanup(self) -> "TriangleMesh":
        """Weld coincident vertices, drop collapsed, degenerate and folded faces, compact.

        A folded pair is two faces on the same vertices with opposite winding;
        both are removed. Same-winding copies keep one face.
        """
        if self.is_empty:
            return TriangleMesh.empty()
        faces = self.faces
        pairs = cKDTree(self.vertices).query_pairs(WELD_DISTANCE, output_type="ndarray")
        if len(pairs):
            n = len(self.vertices)
            graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
            _, labels = connected_components(graph, directed=False)
            _, first = np.unique(labels, return_index=True)
            faces = first[labels][faces]

        distinct = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
        keep = distinct & (TriangleMesh(self.vertices, faces).areas() >= DEGENERATE_AREA)
        degenerate = int((~keep).sum())
        faces = faces[keep]
        if len(faces) == 0:
            logger.warning(f"Dropped {degenerate} collapsed or degenerate faces during cleanup")
            return TriangleMesh.empty()

        # rotate so the smallest index leads; same winding then means equal rows
        lead = np.argmin(faces, axis=1)
        rolled = np.stack([faces[np.arange(len(faces)), (lead + k) % 3] for k in range(3)], axis=1)
        _, first = np.unique(rolled, axis=0, return_index=True)
        unique_faces = rolled[np.sort(first)]
        _, vertex_group, counts = np.unique(
            np.sort(unique_faces, axis=1), axis=0, return_inverse=True, return_counts=True
        )
        folded = counts[vertex_group.ravel()] > 1
        faces = unique_faces[~folded]
        removed = degenerate + (len(rolled) - len(faces))
        if removed:
            logger.warning(f"Dropped {removed} collapsed, degenerate or folded faces during cleanup")
        if len(faces) == 0:
            return TriangleMesh.empty()
        used, inverse = np.unique(faces.ravel(), return_inverse=True)
        return TriangleMesh(self.vertices[used], inverse.reshape(-1, 3))

    def subdivide_midpoint(self) -> "TriangleMesh":
        """1-to-4 midpoint subdivision; geometry is unchanged."""
        if self.is_empty:
            return TriangleMesh.empty()
        edges = np.sort(self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        unique, inverse = np.unique(edges, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1, 3)
        midpoints = 0.5 * (self.vertices[unique[:, 0]] + self.vertices[unique[:, 1]])
        base = len(self.vertices)
        a, b, c = self.faces[:, 0], self.faces[:, 1], self.faces[:, 2]
        ab, bc, ca = (inverse[:, 0] + base, inverse[:, 1] + base, inverse[:, 2] + base)
        faces = np.concatenate([
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ])
        return TriangleMesh(np.vstack([self.vertices, midpoints]), faces)

    def to_trimesh(self) -> trimesh.Trimesh:
        return trimesh.Trimesh(vertices=self.vertices.copy(), faces=self.faces.copy(), process=False)
