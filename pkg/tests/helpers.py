"""Scene builders shared by the tests."""
import numpy as np

from gwrap.services.core import OrientedGaussian


def random_quaternion(rng: np.random.Generator):
    q = rng.normal(size=4)
    return tuple(q / np.linalg.norm(q))


def random_gaussian(rng: np.random.Generator, opacity: float = 0.8) -> OrientedGaussian:
    return OrientedGaussian(
        mean=tuple(rng.uniform(-1.0, 1.0, size=3)),
        scales=tuple(rng.uniform(0.1, 0.5, size=3)),
        rotation=random_quaternion(rng),
        opacity=opacity,
        normal_sign=float(rng.normal()),
        normal_dir=tuple(rng.normal(size=3)),
    )


def isotropic(mean, sigma=0.1, opacity=0.9, normal=(0.0, 0.0, 1.0), color=(0.5, 0.5, 0.5), normal_sign=5.0):
    return OrientedGaussian.create(mean, (sigma, sigma, sigma), opacity=opacity, normal=normal, color=color, normal_sign=normal_sign)


def radial_isosurface(scene, directions, lo=0.8, hi=1.2, iterations=40, config=None):
    """Points where vacancy crosses 0.5 along rays from the origin, by bisection."""
    from gwrap.services.fields import vacancy_lower_bound_batch

    directions = np.asarray(directions, dtype=float)
    lo = np.full(len(directions), lo)
    hi = np.full(len(directions), hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        outside = vacancy_lower_bound_batch(scene, mid[:, None] * directions, config) > 0.5
        hi = np.where(outside, mid, hi)
        lo = np.where(outside, lo, mid)
    return 0.5 * (lo + hi)[:, None] * directions


def plane_gaussians(
    spacing=0.1, half_extent=1.5, opacity=0.3, thickness=0.1, tilt_degrees=0.0, normal_sign=5.0, color=(0.5, 0.5, 0.5)
):
    """Square lattice of flattened Gaussians on the z=0 plane, tilted about the x axis."""
    from gwrap.services.core import frame_from_normal

    angle = np.radians(tilt_degrees)
    tilt = np.array([[1.0, 0.0, 0.0], [0.0, np.cos(angle), -np.sin(angle)], [0.0, np.sin(angle), np.cos(angle)]])
    normal = tilt @ np.array([0.0, 0.0, 1.0])
    ticks = np.arange(-half_extent, half_extent + 1e-9, spacing)
    uu, vv = np.meshgrid(ticks, ticks, indexing="ij")
    means = np.column_stack([uu.ravel(), vv.ravel(), np.zeros(uu.size)]) @ tilt.T
    rotation = frame_from_normal(normal)
    return [
        OrientedGaussian.create(
            tuple(mu), (spacing, spacing, thickness * spacing), rotation,
            opacity=opacity, normal=tuple(normal), normal_sign=normal_sign, color=color,
        )
        for mu in means
    ], normal
