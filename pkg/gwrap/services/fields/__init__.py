"""Geometric fields package.

This package provides the closed-form fields of an oriented-Gaussian scene:
transmittance, plain and oriented attenuation, the Gaussian vector and
normal fields, and the camera-based vacancy lower bound.
"""

from .attenuation import (
    attenuation,
    attenuation_batch,
    max_contribution_t,
    oriented_attenuation,
    oriented_attenuation_batch,
    transmittance,
    transmittance_batch,
)
from .vacancy import (
    FieldSample,
    camera_transmittances,
    field_sample,
    field_samples,
    integrated_vacancy,
    occupancy_batch,
    vacancy_lower_bound,
    vacancy_lower_bound_batch,
)
from .vector import (
    normal_field,
    normal_field_batch,
    normalize_field,
    vector_field,
    vector_field_batch,
    vector_field_terms,
)

__all__ = [
    "FieldSample",
    "max_contribution_t",
    "transmittance",
    "transmittance_batch",
    "attenuation",
    "attenuation_batch",
    "oriented_attenuation",
    "oriented_attenuation_batch",
    "vector_field",
    "vector_field_batch",
    "vector_field_terms",
    "normal_field",
    "normal_field_batch",
    "normalize_field",
    "vacancy_lower_bound",
    "vacancy_lower_bound_batch",
    "camera_transmittances",
    "occupancy_batch",
    "field_sample",
    "field_samples",
    "integrated_vacancy",
]
