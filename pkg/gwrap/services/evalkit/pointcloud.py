"""Point clouds and the mesh sampling protocols."""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from gwrap.api.models import Box
from gwrap.services.core import TriangleMesh
from gwrap.services.errors import BadParams, CropEmpty
from gwrap.services.parallel import rng_for

logger = logging.getLogger(__name__)

OVERSAMPLE_LIMIT = 100


@dataclass(frozen=True)
class PointCloud:
    """Finite (M, 3) points, all inside ``crop`` when one is set."""

    points: np.ndarray
    crop: Optional[Box] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise BadParams("point cloud contains non-finite coordinates")
        if self.crop is not None and len(points) and not self.crop.contains(points).all():
            raise BadParams("point cloud has points outside its crop box")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def cropped(cls, points: np.ndarray, crop: Optional[Box] = None) -> "PointCloud":
        """Cloud of the given points that fall inside ``crop``."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        if crop is not None and len(points):
            points = points[crop.contains(points)]
        return cls(points, crop)

    def diagonal(self) -> float:
        if self.crop is not None:
            return self.crop.diagonal
        if len(self.points) == 0:
            return 0.0
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))


def sample_triangles(mesh: TriangleMesh, count: int, rng: np.random.Generator) -> np.ndarray:
    """Area-weighted uniform points on the mesh surface."""
    areas = mesh.areas()
    faces = rng.choice(len(areas), size=count, p=areas / areas.sum())
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    corners = mesh.corners[faces]
    return (
        (1.0 - r1)[:, None] * corners[:, 0]
        + (r1 * (1.0 - r2))[:, None] * corners[:, 1]
        + (r1 * r2)[:, None] * corners[:, 2]
    )


def uniform_sample(
    mesh: TriangleMesh,
    count: int,
    crop: Optional[Box] = None,
    seed: int = 0,
    oversample_limit: int = OVERSAMPLE_LIMIT,
) -> PointCloud:
    """Uniform surface samples inside the crop box.

    Points falling outside the crop are redrawn until ``count`` points are
    collected or ``oversample_limit * count`` draws have been spent.

    Args:
        mesh: Non-empty triangle mesh
        count: Requested number of points
        crop: Optional crop box
        seed: Run seed
        oversample_limit: Draw budget as a multiple of count

    Returns:
        PointCloud of at most count points

    Raises:
        CropEmpty: If no draw lands inside the crop
    """
    if mesh.is_empty or mesh.total_area() <= 0.0:
        raise BadParams("cannot sample a mesh without area")
    if count < 1:
        raise BadParams(f"sample count must be >= 1, got {count}")
    rng = rng_for(seed, "uniform-sample")
    if crop is None:
        return PointCloud(sample_triangles(mesh, count, rng))

    budget = oversample_limit * count
    drawn = 0
    kept = []
    collected = 0
    while collected < count and drawn < budget:
        batch = min(budget - drawn, max(count - collected, 1024))
        points = sample_triangles(mesh, batch, rng)
        drawn += batch
        inside = points[crop.contains(points)]
        kept.append(inside[: count - collected])
        collected += len(kept[-1])

    if collected == 0:
        raise CropEmpty(f"no surface samples inside the crop after {drawn} draws", drawn=drawn)
    if collected < count:
        logger.warning(f"Uniform sampling returned {collected} of {count} points after {drawn} draws")
    return PointCloud(np.concatenate(kept), crop)


def legacy_point_cloud(mesh: TriangleMesh, crop: Optional[Box] = None) -> PointCloud:
    """Mesh vertices followed by face centroids, cropped."""
    if mesh.is_empty:
        raise BadParams("legacy cloud needs a non-empty mesh")
    return PointCloud.cropped(np.vstack([mesh.vertices, mesh.centroids()]), crop)
