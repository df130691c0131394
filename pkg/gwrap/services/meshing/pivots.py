"""Delaunay pivots spawned from oriented Gaussians."""
import logging
from dataclasses import dataclass

import numpy as np

from gwrap.api.models import PivotMode
from gwrap.services.core import GaussianScene

logger = logging.getLogger(__name__)

PIVOT_NORMAL_EPS = 1e-6
OFFSET_SCALES = {
    PivotMode.two: (3.0,),
    PivotMode.dense: (1.0, 2.0, 3.0, -1.0, -2.0, -3.0),
}

CENTER = 0
OFFSET = 1


@dataclass(frozen=True)
class PivotSet:
    """Pivot points with their origin.

    Attributes:
        points: (P, 3) pivot positions
        gaussian: (P,) index of the originating Gaussian
        kind: (P,) CENTER or OFFSET
    """

    points: np.ndarray
    gaussian: np.ndarray
    kind: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def normal_scales(rotations: np.ndarray, scales: np.ndarray, unit_normals: np.ndarray) -> np.ndarray:
    """|diag(s) R^T n| for each Gaussian and unit normal."""
    local = np.einsum("nji,nj->ni", rotations, unit_normals)
    return np.linalg.norm(scales * local, axis=1)


def generate_pivots(scene: GaussianScene, mode: PivotMode = PivotMode.two) -> PivotSet:
    """Center and normal-offset pivots of every Gaussian with a usable normal.

    In ``two`` mode each Gaussian yields mu and mu + 3 s n; ``dense`` adds
    offsets at +-1, +-2 and +-3 s n around the center.

    Args:
        scene: Gaussian scene
        mode: Pivot layout

    Returns:
        PivotSet ordered by Gaussian, center first
    """
    mode = PivotMode(mode)
    norms = np.linalg.norm(scene.normals, axis=1) if len(scene) else np.zeros(0)
    valid = np.flatnonzero(norms >= PIVOT_NORMAL_EPS)
    skipped = len(scene) - len(valid)
    if skipped:
        logger.warning(f"Skipped {skipped} Gaussians with near-zero oriented normals when generating pivots")

    unit = scene.normals[valid] / norms[valid, None]
    scales = normal_scales(scene.rotations[valid], scene.scales[valid], unit)

    offsets = OFFSET_SCALES[mode]
    per = 1 + len(offsets)
    points = np.empty((len(valid), per, 3))
    points[:, 0] = scene.means[valid]
    for slot, factor in enumerate(offsets, start=1):
        points[:, slot] = scene.means[valid] + factor * scales[:, None] * unit
    kind = np.full((len(valid), per), OFFSET, dtype=np.int8)
    kind[:, 0] = CENTER
    logger.debug(f"Generated {len(valid) * per} pivots ({mode.value}) from {len(valid)} Gaussians")
    return PivotSet(
        points=points.reshape(-1, 3),
        gaussian=np.repeat(valid, per),
        kind=kind.ravel(),
    )
