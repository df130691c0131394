"""Rendering package.

This package provides per-ray alpha compositing of oriented Gaussians,
image-space maps with depth-derived pseudo-normals, the normal alignment
loss, the quadrature ray marcher and map file output.
"""

from .compositing import (
    BlendOrder,
    CompositeResult,
    Contribution,
    blend_order,
    composite_ray,
    composite_rays,
    final_transmittance,
    median_depth,
    ray_contributions,
)
from .maps import (
    RenderedMaps,
    alignment_loss_map,
    depth_to_pseudo_normals,
    normal_alignment_loss,
    render_batch,
    render_maps,
)
from .equivalence import compare_compositing, random_rays
from .marching import ray_march_color
from .output import read_raw_map, save_maps, write_png, write_raw_map

__all__ = [
    "BlendOrder",
    "CompositeResult",
    "Contribution",
    "RenderedMaps",
    "blend_order",
    "composite_ray",
    "composite_rays",
    "final_transmittance",
    "median_depth",
    "ray_contributions",
    "render_batch",
    "render_maps",
    "depth_to_pseudo_normals",
    "alignment_loss_map",
    "normal_alignment_loss",
    "ray_march_color",
    "random_rays",
    "compare_compositing",
    "save_maps",
    "write_png",
    "write_raw_map",
    "read_raw_map",
]
