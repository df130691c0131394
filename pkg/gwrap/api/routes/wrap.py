"""Normal optimization subcommand."""
import logging
from pathlib import Path

from gwrap.services.cli_io import save_scene
from gwrap.services.wrap import optimize_normals
from .common import run_config, scene_from

logger = logging.getLogger(__name__)


def wrap_command(args) -> int:
    config = run_config(args)
    scene = scene_from(args, config)
    wrapped, report = optimize_normals(scene, config.wrap, config.seed, config.render)
    save_scene(wrapped, args.out)
    report_path = args.report or Path(args.out).with_suffix(".report.csv")
    report.to_csv(report_path)
    return 0


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("wrap", parents=parents, help="Optimize Gaussian normals to wrap the surface")
    parser.add_argument("--scene", required=True)
    parser.add_argument("--out", required=True, help="Updated scene file")
    parser.add_argument("--report", help="WrapReport CSV (default: <out>.report.csv)")
    parser.set_defaults(handler=wrap_command)
