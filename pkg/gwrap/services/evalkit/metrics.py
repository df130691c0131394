"""Chamfer distance, F1 at a threshold and the per-protocol evaluation."""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from gwrap.api.models import EvalConfig, EvalResult, Protocol
from gwrap.services.core import PinholeCamera, TriangleMesh
from gwrap.services.errors import BadParams, EmptyCloud, NoCameras
from .bvh import virtual_scan
from .pointcloud import PointCloud, legacy_point_cloud, uniform_sample

logger = logging.getLogger(__name__)

TAU_FRACTION = 0.01


def _require_points(*clouds: PointCloud) -> None:
    for cloud in clouds:
        if len(cloud) == 0:
            raise EmptyCloud("point cloud is empty")


def nearest_distances(a: PointCloud, b: PointCloud) -> Tuple[np.ndarray, np.ndarray]:
    """Distance from every point of a to b and from every point of b to a."""
    _require_points(a, b)
    a_to_b, _ = cKDTree(b.points).query(a.points)
    b_to_a, _ = cKDTree(a.points).query(b.points)
    return a_to_b, b_to_a


def chamfer(a: PointCloud, b: PointCloud) -> float:
    """Average of the two mean nearest-neighbor distances."""
    a_to_b, b_to_a = nearest_distances(a, b)
    return 0.5 * (float(a_to_b.mean()) + float(b_to_a.mean()))


def f1_at(pred: PointCloud, gt: PointCloud, tau: float, protocol: Protocol = Protocol.uniform) -> EvalResult:
    """Precision, recall and F1 of pred against gt at distance tau.

    Args:
        pred: Predicted surface points
        gt: Ground-truth surface points
        tau: Distance threshold, world units
        protocol: Tag recorded in the result

    Returns:
        EvalResult including the Chamfer distance
    """
    if tau <= 0.0:
        raise BadParams(f"tau must be positive, got {tau}")
    pred_to_gt, gt_to_pred = nearest_distances(pred, gt)
    precision = float(np.mean(pred_to_gt <= tau))
    recall = float(np.mean(gt_to_pred <= tau))
    total = precision + recall
    f1 = 2.0 * precision * recall / total if total > 0.0 else 0.0
    return EvalResult(
        protocol=protocol,
        precision=precision,
        recall=recall,
        f1=f1,
        chamfer=0.5 * (float(pred_to_gt.mean()) + float(gt_to_pred.mean())),
        tau=tau,
        pred_points=len(pred),
        gt_points=len(gt),
    )


def default_tau(gt: PointCloud) -> float:
    """1% of the ground-truth crop diagonal, or of its bounding box without a crop."""
    _require_points(gt)
    tau = TAU_FRACTION * gt.diagonal()
    if tau <= 0.0:
        raise BadParams("ground truth spans no volume; pass tau explicitly")
    return tau


def protocol_cloud(
    mesh: TriangleMesh,
    protocol: Protocol,
    gt: PointCloud,
    cameras: Sequence[PinholeCamera] = (),
    config: Optional[EvalConfig] = None,
    seed: int = 0,
) -> PointCloud:
    """Predicted point cloud of a mesh under one evaluation protocol."""
    config = config or EvalConfig()
    protocol = Protocol(protocol)
    if protocol is Protocol.uniform:
        return uniform_sample(mesh, config.uniform_count, gt.crop, seed, config.oversample_limit)
    if protocol is Protocol.legacy:
        return legacy_point_cloud(mesh, gt.crop)
    if not cameras:
        raise NoCameras("virtual scanning needs the scene cameras")
    return virtual_scan(mesh, cameras, gt.crop)


def evaluate_mesh(
    mesh: TriangleMesh,
    gt: PointCloud,
    protocol: Protocol,
    cameras: Sequence[PinholeCamera] = (),
    config: Optional[EvalConfig] = None,
    seed: int = 0,
) -> EvalResult:
    """Score a mesh against ground-truth points under one protocol."""
    config = config or EvalConfig()
    tau = config.tau if config.tau is not None else default_tau(gt)
    pred = protocol_cloud(mesh, protocol, gt, cameras, config, seed)
    result = f1_at(pred, gt, tau, Protocol(protocol))
    logger.info(
        f"Eval {result.protocol.value}: F1 {result.f1:.4f} (P {result.precision:.4f}, R {result.recall:.4f}), "
        f"chamfer {result.chamfer:.5f} at tau {tau:.5f}"
    )
    return result
