"""Vacancy lower bound and bundled field samples.

Vacancy at x is bounded from below by the best transmittance along any
training-camera ray that ends at x. Occupancy is its complement.
"""
import time
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.integrate import trapezoid

from gwrap.api.models import FieldsConfig
from gwrap.services.core import GaussianScene
from gwrap.services.parallel import rng_for
from .attenuation import transmittance_batch
from .vector import DEFAULT_FIELDS, normalize_field, vector_field_batch, vector_field_terms

logger = logging.getLogger(__name__)

# Direction used when the query point coincides with a camera center
FALLBACK_DIRECTION = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class FieldSample:
    vacancy: float
    occupancy: float
    vector: np.ndarray
    normal: np.ndarray
    support_count: int


def _vacancy_cameras(scene: GaussianScene, config: FieldsConfig) -> np.ndarray:
    scene.require_cameras()
    centers = scene.camera_centers
    subset = config.vacancy_camera_subset
    if subset is not None and subset < len(centers):
        seed = config.seed if config.seed is not None else 0
        rng = rng_for(seed, "vacancy-cameras", len(centers))
        chosen = np.sort(rng.choice(len(centers), size=subset, replace=False))
        return centers[chosen]
    return centers


def camera_transmittances(scene: GaussianScene, points: np.ndarray, config: Optional[FieldsConfig] = None) -> np.ndarray:
    """Transmittance from every vacancy camera to every point, shape (C, M)."""
    config = config or DEFAULT_FIELDS
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = _vacancy_cameras(scene, config)
    result = np.empty((len(centers), len(points)))
    for c, center in enumerate(centers):
        offsets = points - center
        distances = np.linalg.norm(offsets, axis=1)
        directions = np.where(
            distances[:, None] > 0.0,
            offsets / np.where(distances > 0.0, distances, 1.0)[:, None],
            FALLBACK_DIRECTION,
        )
        origins = np.broadcast_to(center, points.shape)
        result[c] = transmittance_batch(scene, origins, directions, distances)
    return result


def vacancy_lower_bound_batch(
    scene: GaussianScene, points: np.ndarray, config: Optional[FieldsConfig] = None
) -> np.ndarray:
    """Max over cameras of the transmittance reaching each point.

    Raises:
        NoCameras: If the scene carries no cameras
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    start_time = time.time()
    values = camera_transmittances(scene, points, config).max(axis=0)
    if len(points) >= 10000:
        logger.debug(f"Vacancy for {len(points)} points completed in {time.time() - start_time:.2f} seconds")
    return values


def vacancy_lower_bound(scene: GaussianScene, x, config: Optional[FieldsConfig] = None) -> float:
    return float(vacancy_lower_bound_batch(scene, np.asarray(x, dtype=float)[None, :], config)[0])


def occupancy_batch(scene: GaussianScene, points: np.ndarray, config: Optional[FieldsConfig] = None) -> np.ndarray:
    return 1.0 - vacancy_lower_bound_batch(scene, points, config)


def field_samples(
    scene: GaussianScene, points: np.ndarray, k: int = DEFAULT_FIELDS.k_neighbors, config: Optional[FieldsConfig] = None
) -> List[FieldSample]:
    """FieldSample for each point, sharing one vacancy and one vector-field pass."""
    config = config or DEFAULT_FIELDS
    points = np.atleast_2d(np.asarray(points, dtype=float))
    vacancy = vacancy_lower_bound_batch(scene, points, config)
    vectors, counts = vector_field_terms(scene, points, k)
    normals = normalize_field(vectors, config.vector_zero_eps)
    return [
        FieldSample(
            vacancy=float(v),
            occupancy=float(1.0 - v),
            vector=vec,
            normal=nrm,
            support_count=int(count),
        )
        for v, vec, nrm, count in zip(vacancy, vectors, normals, counts)
    ]


def field_sample(scene: GaussianScene, x, k: int = DEFAULT_FIELDS.k_neighbors, config: Optional[FieldsConfig] = None) -> FieldSample:
    return field_samples(scene, np.asarray(x, dtype=float)[None, :], k, config)[0]


def integrated_vacancy(
    scene: GaussianScene,
    x,
    k: int = DEFAULT_FIELDS.k_neighbors,
    step: Optional[float] = None,
    config: Optional[FieldsConfig] = None,
) -> float:
    """exp of the trapezoid integral of V . w along the least-obstructed camera ray to x.

    Diagnostic estimate of vacancy; on wrapped scenes the lower bound never
    exceeds it beyond quadrature error.
    """
    x = np.asarray(x, dtype=float)
    per_camera = camera_transmittances(scene, x[None, :], config)[:, 0]
    center = _vacancy_cameras(scene, config or DEFAULT_FIELDS)[int(np.argmax(per_camera))]
    offset = x - center
    length = float(np.linalg.norm(offset))
    if length == 0.0:
        return 1.0
    w = offset / length
    if step is None:
        step = float(scene.scales.min()) / 20.0 if len(scene) else length
    count = max(2, int(np.ceil(length / step)) + 1)
    s = np.linspace(0.0, length, count)
    integrand = vector_field_batch(scene, center + s[:, None] * w, k) @ w
    return float(np.exp(trapezoid(integrand, s)))
