"""Primal adaptive meshing.

Points are sampled on an MTet mesh, pulled onto the 0.5 vacancy level set
by damped Newton steps along the Gaussian vector field, filtered, and
resampled until no outliers remain. Their Delaunay tetrahedralization is
then split into inside and outside tets by vacancy votes; pinched edges
are closed by growing the inside set, and the faces between the two sets
form the surface.
"""
import time
import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from gwrap.api.models import FieldsConfig, MtetConfig, PamConfig
from gwrap.services.core import GaussianScene, PinholeCamera, TriangleMesh
from gwrap.services.errors import BadParams, DegenerateInput, InsufficientPoints, NoCameras
from gwrap.services.fields import vacancy_lower_bound_batch, vector_field_batch
from gwrap.services.fields.vector import DEFAULT_FIELDS
from gwrap.services.parallel import rng_for
from .delaunay import TetMesh, delaunay_tetrahedralize
from .tetra import mesh_mtet
from .watertight import non_manifold_edges

logger = logging.getLogger(__name__)

DEFAULT_PAM = PamConfig()
ISO = 0.5
# outward vertex order of the face opposite each tet vertex
OUTWARD_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])
NEWTON_STEP_FRACTION = 0.05
TET_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])


def _camera_centers(cameras: Union[np.ndarray, Sequence[PinholeCamera]]) -> np.ndarray:
    if isinstance(cameras, np.ndarray):
        return cameras.reshape(-1, 3)
    return np.array([c.center for c in cameras], dtype=float).reshape(-1, 3)


def pam_sample_faces(
    mesh: TriangleMesh,
    cameras: Union[np.ndarray, Sequence[PinholeCamera]],
    count: int,
    seed: int = 0,
    round_index: int = 0,
) -> np.ndarray:
    """Camera-weighted surface samples.

    A face is picked with probability proportional to its area over the
    distance from its centroid to the nearest camera center, then a point is
    drawn uniformly inside it.

    Args:
        mesh: Non-empty sampling substrate
        cameras: Cameras or an (C, 3) array of camera centers
        count: Number of points
        seed: Run seed
        round_index: Resampling round, selects an independent stream

    Returns:
        (count, 3) points
    """
    if mesh.is_empty:
        raise BadParams("cannot sample an empty mesh")
    if count < 1:
        raise BadParams(f"sample count must be >= 1, got {count}")
    centers = _camera_centers(cameras)
    if len(centers) == 0:
        raise NoCameras("face sampling needs at least one camera")

    distances, _ = cKDTree(centers).query(mesh.centroids())
    weights = mesh.areas() / np.maximum(distances, 1e-12)
    total = weights.sum()
    if total <= 0.0:
        raise BadParams("mesh has no area to sample")

    rng = rng_for(seed, "pam-samples", round_index)
    faces = rng.choice(len(weights), size=count, p=weights / total)
    u, v = rng.random(count), rng.random(count)
    fold = u + v > 1.0
    u[fold], v[fold] = 1.0 - u[fold], 1.0 - v[fold]
    corners = mesh.corners[faces]
    return corners[:, 0] + u[:, None] * (corners[:, 1] - corners[:, 0]) + v[:, None] * (corners[:, 2] - corners[:, 0])


def pam_newton_project(
    points: np.ndarray,
    scene: GaussianScene,
    steps: int,
    max_step: Optional[float] = None,
    fields: Optional[FieldsConfig] = None,
) -> np.ndarray:
    """Damped Newton steps toward vacancy 0.5.

    Each step moves x by (0.5 - v) V / (2 v |V|^2), the Newton step for
    grad v = v V halved, clamped to ``max_step``. Points whose vector field
    is below vector_zero_eps stay where they are.

    Args:
        points: (M, 3) starting points
        scene: Scene with cameras
        steps: Number of Newton steps, >= 1
        max_step: Longest allowed move per step; 5% of the scene diagonal if None
        fields: Field settings

    Returns:
        (M, 3) projected points
    """
    if steps < 1:
        raise BadParams(f"Newton steps must be >= 1, got {steps}")
    fields = fields or DEFAULT_FIELDS
    max_step = max_step if max_step is not None else NEWTON_STEP_FRACTION * scene.diagonal
    x = np.array(points, dtype=float).reshape(-1, 3)
    for _ in range(steps):
        vacancy = vacancy_lower_bound_batch(scene, x, fields)
        vectors = vector_field_batch(scene, x, fields.k_neighbors)
        norm_sq = np.einsum("mi,mi->m", vectors, vectors)
        movable = (np.sqrt(norm_sq) >= fields.vector_zero_eps) & (vacancy > 0.0)
        scale = np.zeros(len(x))
        scale[movable] = 0.5 * (ISO - vacancy[movable]) / (vacancy[movable] * norm_sq[movable])
        delta = scale[:, None] * vectors
        length = np.linalg.norm(delta, axis=1)
        too_long = length > max_step
        delta[too_long] *= (max_step / length[too_long])[:, None]
        x = x + delta
    return x


def pam_filter(
    points: np.ndarray, scene: GaussianScene, eps: float, fields: Optional[FieldsConfig] = None
) -> Tuple[np.ndarray, int]:
    """Keep the points with |0.5 - v| <= eps, in input order.

    Returns:
        (kept points, number removed)
    """
    if eps <= 0.0:
        raise BadParams(f"filter epsilon must be positive, got {eps}")
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) == 0:
        return points, 0
    keep = np.abs(ISO - vacancy_lower_bound_batch(scene, points, fields)) <= eps
    return points[keep], int((~keep).sum())


def pam_classify_tets(
    tets: TetMesh,
    scene: GaussianScene,
    samples_per_tet: int,
    seed: int = 0,
    fields: Optional[FieldsConfig] = None,
) -> np.ndarray:
    """Inside labels by median vacancy of random interior points.

    Returns:
        (T,) True where the median vacancy of the tet's samples is below 0.5
    """
    if samples_per_tet < 1:
        raise BadParams(f"samples_per_tet must be >= 1, got {samples_per_tet}")
    if len(tets) == 0:
        return np.zeros(0, dtype=bool)
    start_time = time.time()
    rng = rng_for(seed, "pam-classify")
    barycentric = rng.dirichlet(np.ones(4), size=(len(tets), samples_per_tet))
    samples = np.einsum("tsk,tkj->tsj", barycentric, tets.vertices[tets.tets])
    vacancy = vacancy_lower_bound_batch(scene, samples.reshape(-1, 3), fields).reshape(len(tets), samples_per_tet)
    inside = np.median(vacancy, axis=1) < ISO
    logger.info(
        f"Classified {len(tets)} tets ({int(inside.sum())} inside) "
        f"completed in {time.time() - start_time:.2f} seconds"
    )
    return inside


def _separating_faces(tets: TetMesh, labels: np.ndarray) -> np.ndarray:
    """Outward faces of the inside tets in tet-vertex indices."""
    inside = np.flatnonzero(labels)
    neighbors = tets.neighbors[inside]
    across_inside = np.where(neighbors >= 0, labels[np.maximum(neighbors, 0)], False)
    tet_idx, face_slot = np.nonzero(~across_inside)
    return np.take_along_axis(tets.tets[inside[tet_idx]], OUTWARD_FACES[face_slot], axis=1)


def pam_close_pinches(tets: TetMesh, labels: np.ndarray) -> np.ndarray:
    """Grow the inside set until the separating surface has no non-manifold edge.

    Inside tets that meet only along an edge pinch the surface there. Every
    tet around such an edge is marked inside, which makes the edge interior
    or a plain hull edge; passes repeat until no pinch is left. Labels only
    grow, so the loop ends at the latest when every tet is inside.

    Returns:
        (T,) updated labels
    """
    labels = np.array(labels, dtype=bool)
    if labels.shape != (len(tets),):
        raise BadParams(f"expected {len(tets)} labels, got {labels.shape}")
    if not labels.any():
        return labels
    n = len(tets.vertices)
    tet_edges = np.sort(tets.tets[:, TET_EDGES], axis=2)
    tet_keys = tet_edges[..., 0] * n + tet_edges[..., 1]
    grown = 0
    while True:
        pinched = non_manifold_edges(_separating_faces(tets, labels))
        if len(pinched) == 0:
            break
        around = np.isin(tet_keys, pinched[:, 0] * n + pinched[:, 1]).any(axis=1) & ~labels
        if not around.any():
            logger.warning(f"{len(pinched)} pinched edges could not be closed")
            break
        labels |= around
        grown += int(around.sum())
    if grown:
        logger.info(f"Closed pinched edges by adding {grown} tets to the inside set")
    return labels


def pam_extract(tets: TetMesh, labels: np.ndarray) -> TriangleMesh:
    """Faces separating inside tets from outside tets or the hull, oriented outward."""
    labels = np.asarray(labels, dtype=bool)
    if labels.shape != (len(tets),):
        raise BadParams(f"expected {len(tets)} labels, got {labels.shape}")
    if not labels.any():
        return TriangleMesh.empty()
    faces = _separating_faces(tets, labels)
    used, compact = np.unique(faces.ravel(), return_inverse=True)
    return TriangleMesh(tets.vertices[used], compact.reshape(-1, 3))


def mesh_pam(
    scene: GaussianScene,
    config: Optional[PamConfig] = None,
    seed: int = 0,
    mtet: Optional[MtetConfig] = None,
    fields: Optional[FieldsConfig] = None,
) -> TriangleMesh:
    """Primal adaptive meshing of the 0.5 vacancy surface.

    Samples are drawn on the MTet mesh (restricted to ``config.roi`` when
    set), projected and filtered; removed samples are redrawn from the same
    mesh and the loop stops once a round removes nothing or after
    max_rounds. The survivors are tetrahedralized, classified and the
    separating faces returned.

    Args:
        scene: Scene with cameras
        config: Sampling, projection and classification settings
        seed: Run seed
        mtet: Settings of the substrate mesh
        fields: Field settings

    Returns:
        Outward-oriented triangle mesh

    Raises:
        NoCameras: If the scene has no cameras
        InsufficientPoints: If fewer than 4 points survive filtering
    """
    config = config or DEFAULT_PAM
    scene.require_cameras()
    start_time = time.time()

    substrate = mesh_mtet(scene, mtet, fields)
    if config.roi is not None and not substrate.is_empty:
        in_roi = config.roi.contains(substrate.centroids())
        substrate = TriangleMesh(substrate.vertices, substrate.faces[in_roi])
    if substrate.is_empty:
        raise InsufficientPoints("no MTet surface to sample from", roi=config.roi is not None)

    centers = scene.camera_centers
    survivors = np.zeros((0, 3))
    request = config.samples
    removed = 0
    for round_index in range(config.max_rounds):
        samples = pam_sample_faces(substrate, centers, request, seed, round_index)
        projected = pam_newton_project(samples, scene, config.newton_steps, config.newton_max_step, fields)
        if config.roi is not None:
            projected = projected[config.roi.contains(projected)]
        kept, removed = pam_filter(projected, scene, config.epsilon, fields)
        removed += request - len(projected)
        survivors = np.vstack([survivors, kept])
        logger.info(f"PAM round {round_index}: sampled {request}, kept {len(kept)}, removed {removed}")
        if removed == 0:
            break
        request = removed
    else:
        logger.warning(f"PAM stopped after {config.max_rounds} rounds with {removed} samples still removed")

    if len(survivors) < 4:
        raise InsufficientPoints(f"only {len(survivors)} points survived filtering", survivors=len(survivors))
    try:
        tets = delaunay_tetrahedralize(survivors)
    except DegenerateInput as exc:
        raise InsufficientPoints(f"surviving points span no volume: {exc}", survivors=len(survivors)) from exc
    labels = pam_classify_tets(tets, scene, config.samples_per_tet, seed, fields)
    labels = pam_close_pinches(tets, labels)
    mesh = pam_extract(tets, labels).cleanup()

    logger.info(
        f"PAM mesh: {len(survivors)} points, {len(mesh.vertices)} vertices, {len(mesh.faces)} faces "
        f"completed in {time.time() - start_time:.2f} seconds"
    )
    return mesh
