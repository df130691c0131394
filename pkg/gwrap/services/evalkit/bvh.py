"""Bounding volume hierarchy over triangles and depth-map virtual scans.

The tree is built top-down by median splits of the triangle centroids along
the widest axis and flattened into arrays; leaves own a contiguous range of
the reordered triangles. Traversal carries a packet of ray indices per node
so every box and triangle test is a numpy operation over many rays.
"""
import time
import logging
from typing import List, Optional, Sequence

import numpy as np

from gwrap.api.models import Box
from gwrap.services.core import PinholeCamera, TriangleMesh
from gwrap.services.errors import BadParams, NoCameras
from gwrap.services.parallel import parallel_map
from .pointcloud import PointCloud

logger = logging.getLogger(__name__)

LEAF_SIZE = 8
HIT_EPS = 1e-12


class TriangleBVH:
    """Flattened BVH.

    Attributes:
        triangles: (F, 3, 3) corners in leaf order
        lo, hi: (K, 3) node bounds
        left, right: (K,) child node ids, -1 for leaves
        start, stop: (K,) triangle range of leaves
    """

    def __init__(self, mesh: TriangleMesh, leaf_size: int = LEAF_SIZE):
        if mesh.is_empty:
            raise BadParams("cannot build a BVH over an empty mesh")
        corners = mesh.corners
        centroids = corners.mean(axis=1)
        order = np.arange(len(corners))
        lo: List[np.ndarray] = []
        hi: List[np.ndarray] = []
        left: List[int] = []
        right: List[int] = []
        start: List[int] = []
        stop: List[int] = []

        def new_node(begin: int, end: int) -> int:
            tris = corners[order[begin:end]]
            lo.append(tris.min(axis=(0, 1)))
            hi.append(tris.max(axis=(0, 1)))
            left.append(-1)
            right.append(-1)
            start.append(begin)
            stop.append(end)
            return len(lo) - 1

        stack = [new_node(0, len(order))]
        while stack:
            node = stack.pop()
            begin, end = start[node], stop[node]
            if end - begin <= leaf_size:
                continue
            span = centroids[order[begin:end]]
            axis = int(np.argmax(span.max(axis=0) - span.min(axis=0)))
            local = np.argsort(span[:, axis], kind="stable")
            order[begin:end] = order[begin:end][local]
            mid = (begin + end) // 2
            left[node] = new_node(begin, mid)
            right[node] = new_node(mid, end)
            stack.extend([left[node], right[node]])

        self.triangles = corners[order]
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.left = np.array(left)
        self.right = np.array(right)
        self.start = np.array(start)
        self.stop = np.array(stop)

    def __len__(self) -> int:
        return len(self.lo)

    def _box_hits(self, node: int, origins: np.ndarray, inv_dirs: np.ndarray, best: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            t0 = (self.lo[node] - origins) * inv_dirs
            t1 = (self.hi[node] - origins) * inv_dirs
        t_near = np.nanmax(np.minimum(t0, t1), axis=1)
        t_far = np.nanmin(np.maximum(t0, t1), axis=1)
        return (t_near <= t_far) & (t_far >= 0.0) & (t_near < best)

    def _triangle_hits(self, node: int, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """(R,) nearest positive hit distance in a leaf, inf on a miss."""
        tris = self.triangles[self.start[node]:self.stop[node]]
        e1 = tris[:, 1] - tris[:, 0]
        e2 = tris[:, 2] - tris[:, 0]
        p = np.cross(dirs[:, None, :], e2[None, :, :])
        det = np.einsum("rki,ki->rk", p, e1)
        valid = np.abs(det) > HIT_EPS
        inv_det = np.where(valid, 1.0 / np.where(valid, det, 1.0), 0.0)
        s = origins[:, None, :] - tris[None, :, 0]
        u = np.einsum("rki,rki->rk", s, p) * inv_det
        q = np.cross(s, e1[None, :, :])
        v = np.einsum("ri,rki->rk", dirs, q) * inv_det
        t = np.einsum("rki,ki->rk", q, e2) * inv_det
        hit = valid & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > HIT_EPS)
        return np.where(hit, t, np.inf).min(axis=1)

    def intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """First-hit distance of every ray.

        Args:
            origins: (R, 3) ray origins
            dirs: (R, 3) ray directions

        Returns:
            (R,) hit distances, inf where the ray misses
        """
        origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        with np.errstate(divide="ignore"):
            inv_dirs = 1.0 / dirs
        best = np.full(len(origins), np.inf)
        stack = [(0, np.arange(len(origins)))]
        while stack:
            node, rays = stack.pop()
            rays = rays[self._box_hits(node, origins[rays], inv_dirs[rays], best[rays])]
            if len(rays) == 0:
                continue
            if self.left[node] < 0:
                best[rays] = np.minimum(best[rays], self._triangle_hits(node, origins[rays], dirs[rays]))
            else:
                stack.append((self.right[node], rays))
                stack.append((self.left[node], rays))
        return best


def depth_points(bvh: TriangleBVH, camera: PinholeCamera) -> np.ndarray:
    """Back-projected first hits of every pixel-center ray of one camera."""
    origins, dirs = camera.pixel_rays()
    t = bvh.intersect(origins, dirs)
    hit = np.isfinite(t)
    return origins[hit] + t[hit, None] * dirs[hit]


def virtual_scan(
    mesh: TriangleMesh, cameras: Sequence[PinholeCamera], crop: Optional[Box] = None
) -> PointCloud:
    """Surface points seen from the given cameras.

    Args:
        mesh: Non-empty triangle mesh
        cameras: Scan cameras, each at its own resolution
        crop: Optional crop box

    Returns:
        Concatenated back-projected hits in camera order, cropped
    """
    if not cameras:
        raise NoCameras("virtual scan needs at least one camera")
    start_time = time.time()
    bvh = TriangleBVH(mesh)
    per_camera = parallel_map(lambda camera: depth_points(bvh, camera), list(cameras))
    cloud = PointCloud.cropped(np.concatenate(per_camera), crop)
    logger.info(
        f"Virtual scan of {len(cameras)} cameras: {len(cloud)} points "
        f"completed in {time.time() - start_time:.2f} seconds"
    )
    return cloud
