"""Surface extraction subcommand."""
import logging

from gwrap.api.models import PivotMode
from gwrap.services.cli_io import save_mesh
from gwrap.services.meshing import mesh_mtet, mesh_pam, watertight_check
from .common import parse_box, run_config, scene_from

logger = logging.getLogger(__name__)


def mesh_command(args) -> int:
    config = run_config(args)
    scene = scene_from(args, config)
    mtet = config.mtet
    if args.pivots:
        mtet = mtet.model_copy(update={"pivot_mode": PivotMode(args.pivots)})

    if args.method == "mtet":
        if args.roi:
            logger.warning("--roi only applies to pam; ignored")
        mesh = mesh_mtet(scene, mtet, config.fields)
    else:
        pam = config.pam
        roi = parse_box(args.roi, "roi")
        if roi is not None:
            pam = pam.model_copy(update={"roi": roi})
        mesh = mesh_pam(scene, pam, config.seed, mtet, config.fields)

    check = watertight_check(mesh)
    if not check.is_closed_manifold:
        logger.warning(
            f"Mesh is not closed: {check.boundary_edges} boundary and {check.non_manifold_edges} non-manifold edges"
        )
    save_mesh(mesh, args.out)
    return 0


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("mesh", parents=parents, help="Extract a triangle mesh")
    parser.add_argument("method", choices=["mtet", "pam"])
    parser.add_argument("--scene", required=True)
    parser.add_argument("--out", required=True, help=".obj or .ply")
    parser.add_argument("--roi", help="PAM region of interest x0,y0,z0,x1,y1,z1")
    parser.add_argument("--pivots", choices=[m.value for m in PivotMode], help="Override mtet.pivot_mode")
    parser.set_defaults(handler=mesh_command)
