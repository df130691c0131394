"""Incremental Delaunay tetrahedralization.

Bowyer-Watson insertion inside an enclosing super-tetrahedron. Points are
perturbed by a deterministic jitter (1e-9 of the bounding diagonal) so
cospherical and coplanar configurations resolve consistently, inserted in
Morton order, and located by walking from the last created tetrahedron.
Each conflict cavity is grown breadth-first and shrunk until it is
star-shaped from the new point.
"""
import time
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from gwrap.services.errors import DegenerateInput
from gwrap.services.parallel import rng_for

logger = logging.getLogger(__name__)

DEDUP_TOL = 1e-9
JITTER = 1e-9
SUPER_SCALE = 100.0

Point = Tuple[float, float, float]


@dataclass(frozen=True)
class TetMesh:
    """Tetrahedral mesh with face adjacency.

    Attributes:
        vertices: (V, 3) positions used by the predicates
        tets: (T, 4) positively oriented vertex indices
        neighbors: (T, 4) tet across the face opposite each vertex, -1 on the hull
        source: (V,) index of each vertex in the input point list
    """

    vertices: np.ndarray
    tets: np.ndarray
    neighbors: np.ndarray
    source: np.ndarray

    def __len__(self) -> int:
        return len(self.tets)

    def signed_volumes(self) -> np.ndarray:
        p = self.vertices[self.tets]
        return np.einsum("ti,ti->t", p[:, 1] - p[:, 0], np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 0])) / 6.0

    def circumspheres(self) -> Tuple[np.ndarray, np.ndarray]:
        """(T, 3) centers and (T,) radii."""
        p = self.vertices[self.tets]
        u, v, w = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]
        numerator = (
            np.sum(u * u, axis=1)[:, None] * np.cross(v, w)
            + np.sum(v * v, axis=1)[:, None] * np.cross(w, u)
            + np.sum(w * w, axis=1)[:, None] * np.cross(u, v)
        )
        offset = numerator / (2.0 * np.einsum("ti,ti->t", u, np.cross(v, w)))[:, None]
        return p[:, 0] + offset, np.linalg.norm(offset, axis=1)


def _volume6(a: Point, b: Point, c: Point, d: Point) -> float:
    bx, by, bz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    cx, cy, cz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    dx, dy, dz = d[0] - a[0], d[1] - a[1], d[2] - a[2]
    return bx * (cy * dz - cz * dy) - by * (cx * dz - cz * dx) + bz * (cx * dy - cy * dx)


def _circumsphere(a: Point, b: Point, c: Point, d: Point) -> Tuple[float, float, float, float]:
    ux, uy, uz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    vx, vy, vz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    wx, wy, wz = d[0] - a[0], d[1] - a[1], d[2] - a[2]
    vw = (vy * wz - vz * wy, vz * wx - vx * wz, vx * wy - vy * wx)
    wu = (wy * uz - wz * uy, wz * ux - wx * uz, wx * uy - wy * ux)
    uv = (uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx)
    uu, vv, ww = ux * ux + uy * uy + uz * uz, vx * vx + vy * vy + vz * vz, wx * wx + wy * wy + wz * wz
    denom = 2.0 * (ux * vw[0] + uy * vw[1] + uz * vw[2])
    ox = (uu * vw[0] + vv * wu[0] + ww * uv[0]) / denom
    oy = (uu * vw[1] + vv * wu[1] + ww * uv[1]) / denom
    oz = (uu * vw[2] + vv * wu[2] + ww * uv[2]) / denom
    return a[0] + ox, a[1] + oy, a[2] + oz, ox * ox + oy * oy + oz * oz


def _morton_order(points: np.ndarray) -> np.ndarray:
    lo = points.min(axis=0)
    span = np.maximum(points.max(axis=0) - lo, 1e-300)
    grid = np.clip(((points - lo) / span * 1023.0).astype(np.int64), 0, 1023)

    def spread(x: np.ndarray) -> np.ndarray:
        x = (x | (x << 16)) & 0x030000FF
        x = (x | (x << 8)) & 0x0300F00F
        x = (x | (x << 4)) & 0x030C30C3
        x = (x | (x << 2)) & 0x09249249
        return x

    codes = spread(grid[:, 0]) | (spread(grid[:, 1]) << 1) | (spread(grid[:, 2]) << 2)
    return np.argsort(codes, kind="stable")


class _Triangulation:
    """Mutable Bowyer-Watson state over a list of point tuples."""

    def __init__(self, points: List[Point], super_vertices: Tuple[int, int, int, int]):
        self.points = points
        self.verts: List[Optional[List[int]]] = []
        self.nbrs: List[List[int]] = []
        self.spheres: List[Tuple[float, float, float, float]] = []
        self.last = self._add(list(super_vertices))

    def _add(self, verts: List[int]) -> int:
        p = self.points
        self.verts.append(verts)
        self.nbrs.append([-1, -1, -1, -1])
        self.spheres.append(_circumsphere(p[verts[0]], p[verts[1]], p[verts[2]], p[verts[3]]))
        return len(self.verts) - 1

    def _in_sphere(self, t: int, q: Point) -> bool:
        cx, cy, cz, r2 = self.spheres[t]
        dx, dy, dz = q[0] - cx, q[1] - cy, q[2] - cz
        return dx * dx + dy * dy + dz * dz < r2

    def _replaced_volume(self, t: int, i: int, q: Point) -> float:
        v = self.verts[t]
        p = self.points
        corners = [p[v[0]], p[v[1]], p[v[2]], p[v[3]]]
        corners[i] = q
        return _volume6(*corners)

    def locate(self, q: Point) -> int:
        t = self.last
        if self.verts[t] is None:
            t = next(i for i in range(len(self.verts) - 1, -1, -1) if self.verts[i] is not None)
        limit = 4 * len(self.verts) + 100
        rotate = 0
        for _ in range(limit):
            moved = False
            for k in range(4):
                i = (k + rotate) & 3
                if self._replaced_volume(t, i, q) < 0.0 and self.nbrs[t][i] >= 0:
                    t = self.nbrs[t][i]
                    moved = True
                    break
            rotate += 1
            if not moved:
                return t
        # walk cycled on a near-degenerate configuration; any conflicting tet will do
        return next(i for i, v in enumerate(self.verts) if v is not None and self._in_sphere(i, q))

    def insert(self, index: int) -> None:
        q = self.points[index]
        start = self.locate(q)
        cavity = {start}
        queue = [start]
        while queue:
            t = queue.pop()
            for n in self.nbrs[t]:
                if n >= 0 and n not in cavity and self._in_sphere(n, q):
                    cavity.add(n)
                    queue.append(n)

        while True:
            boundary = [
                (t, i) for t in cavity for i in range(4) if self.nbrs[t][i] not in cavity
            ]
            invisible = {t for t, i in boundary if t != start and self._replaced_volume(t, i, q) <= 0.0}
            if not invisible:
                break
            cavity -= invisible

        links: Dict[Tuple[int, int], Tuple[int, int]] = {}
        for t, i in boundary:
            verts = list(self.verts[t])
            outside = self.nbrs[t][i]
            verts[i] = index
            nt = self._add(verts)
            self.nbrs[nt][i] = outside
            if outside >= 0:
                back = self.nbrs[outside]
                back[back.index(t)] = nt
            for j in range(4):
                if j == i:
                    continue
                edge = tuple(sorted(verts[m] for m in range(4) if m != i and m != j))
                if edge in links:
                    other, other_face = links.pop(edge)
                    self.nbrs[nt][j] = other
                    self.nbrs[other][other_face] = nt
                else:
                    links[edge] = (nt, j)
            self.last = nt
        for t in cavity:
            self.verts[t] = None


def delaunay_tetrahedralize(points: np.ndarray) -> TetMesh:
    """Delaunay tetrahedralization of a point set.

    Args:
        points: (N, 3) points; duplicates within 1e-9 of the diagonal are merged

    Returns:
        TetMesh whose vertices are the perturbed unique points

    Raises:
        DegenerateInput: Fewer than 4 unique points, or all coplanar
    """
    start_time = time.time()
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) < 4:
        raise DegenerateInput(f"need at least 4 points, got {len(points)}")

    diagonal = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    duplicates = cKDTree(points).query_pairs(DEDUP_TOL * max(diagonal, 1.0), output_type="ndarray")
    keep = np.ones(len(points), dtype=bool)
    if len(duplicates):
        keep[duplicates[:, 1]] = False
    source = np.flatnonzero(keep)
    unique = points[source]
    if len(unique) < 4:
        raise DegenerateInput(f"need at least 4 unique points, got {len(unique)}")
    centered = unique - unique.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    if singular[0] == 0.0 or singular[2] <= 1e-9 * singular[0]:
        raise DegenerateInput("points are coplanar or collinear", points=len(unique))

    jitter = rng_for(0, "delaunay-jitter", len(unique)).uniform(-1.0, 1.0, size=unique.shape)
    perturbed = unique + JITTER * diagonal * jitter

    n = len(perturbed)
    center = perturbed.mean(axis=0)
    radius = float(np.linalg.norm(perturbed - center, axis=1).max())
    big = SUPER_SCALE * radius + radius
    side = big * np.sqrt(24.0)
    super_points = np.array([
        [center[0] - side / 2, center[1] - np.sqrt(3) * side / 6, center[2] - big],
        [center[0] + side / 2, center[1] - np.sqrt(3) * side / 6, center[2] - big],
        [center[0], center[1] + np.sqrt(3) * side / 3, center[2] - big],
        [center[0], center[1], center[2] + np.sqrt(6) * side / 3 - big],
    ])
    all_points = [tuple(p) for p in np.vstack([perturbed, super_points]).tolist()]
    triangulation = _Triangulation(all_points, (n, n + 1, n + 2, n + 3))
    for index in _morton_order(perturbed).tolist():
        triangulation.insert(index)

    alive = [t for t, v in enumerate(triangulation.verts) if v is not None and max(v) < n]
    remap = {t: k for k, t in enumerate(alive)}
    tets = np.array([triangulation.verts[t] for t in alive], dtype=np.int64).reshape(-1, 4)
    neighbors = np.array(
        [[remap.get(nb, -1) for nb in triangulation.nbrs[t]] for t in alive], dtype=np.int64
    ).reshape(-1, 4)

    logger.info(
        f"Delaunay of {n} points: {len(tets)} tets completed in {time.time() - start_time:.2f} seconds"
    )
    return TetMesh(vertices=perturbed, tets=tets, neighbors=neighbors, source=source)
