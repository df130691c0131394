"""Render and verification subcommands.

This module renders one camera's maps and runs the compositing-versus-marching
equivalence check.
"""
import logging

from gwrap.services.errors import BadParams
from gwrap.services.render import compare_compositing, random_rays, render_maps, save_maps
from gwrap.services.render.equivalence import DEFAULT_TOLERANCE
from .common import run_config, scene_from

logger = logging.getLogger(__name__)


def render_command(args) -> int:
    config = run_config(args)
    scene = scene_from(args, config)
    if not 0 <= args.camera_index < len(scene.cameras):
        raise BadParams(
            f"camera index {args.camera_index} out of range for {len(scene.cameras)} cameras",
            camera_index=args.camera_index,
        )
    maps = render_maps(scene, scene.cameras[args.camera_index], config.render)
    save_maps(maps, args.out)
    return 0


def verify_command(args) -> int:
    """Exit status 1 when the largest color difference exceeds the tolerance."""
    config = run_config(args)
    scene = scene_from(args, config)
    origins, directions = random_rays(scene, args.rays, config.seed)
    report = compare_compositing(scene, origins, directions, args.step, args.tolerance, config.render)
    print(report.model_dump_json())
    if not report.passed:
        logger.error(f"Compositing differs from ray marching by {report.max_error:.3e} on ray {report.worst_ray}")
        return 1
    return 0


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("render", parents=parents, help="Render color, alpha, depth and normal maps")
    parser.add_argument("--scene", required=True)
    parser.add_argument("--camera-index", type=int, default=0)
    parser.add_argument("--out", required=True, help="Output directory")
    parser.set_defaults(handler=render_command)

    parser = subparsers.add_parser("verify", parents=parents, help="Check alpha blending against ray marching")
    parser.add_argument("check", choices=["equivalence"])
    parser.add_argument("--scene", required=True)
    parser.add_argument("--rays", type=int, default=64)
    parser.add_argument("--step", type=float, help="Marching step (default: smallest scale / 20)")
    parser.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    parser.set_defaults(handler=verify_command)
