"""Mesh evaluation subcommands.

This module scores a mesh against a ground-truth cloud under one protocol
and runs the tessellation-bias experiment.
"""
import logging

from gwrap.api.models import Protocol
from gwrap.services.cli_io import load_cloud, load_mesh, load_scene, write_json
from gwrap.services.evalkit import PointCloud, bias_experiment, default_tau, evaluate_mesh
from .common import parse_box, run_config

logger = logging.getLogger(__name__)

# bias exit status when the uniform score moves under subdivision
UNSTABLE_STATUS = 1

PROTOCOLS = {
    "uniform": Protocol.uniform,
    "virtual": Protocol.virtual_scan,
    "legacy": Protocol.legacy,
}


def _ground_truth(args) -> PointCloud:
    return PointCloud.cropped(load_cloud(args.gt), parse_box(args.crop, "crop"))


def eval_command(args) -> int:
    config = run_config(args)
    evaluation = config.evaluation
    if args.tau is not None:
        evaluation = evaluation.model_copy(update={"tau": args.tau})
    if args.count is not None:
        evaluation = evaluation.model_copy(update={"uniform_count": args.count})
    protocol = PROTOCOLS[args.protocol]
    cameras = load_scene(args.scene, config.core).cameras if args.scene else ()

    result = evaluate_mesh(load_mesh(args.pred), _ground_truth(args), protocol, cameras, evaluation, config.seed)
    print(result.model_dump_json())
    if args.out:
        write_json(result, args.out)
    return 0


def bias_command(args) -> int:
    config = run_config(args)
    gt = _ground_truth(args)
    tau = args.tau if args.tau is not None else config.evaluation.tau or default_tau(gt)
    report = bias_experiment(
        load_mesh(args.pred),
        gt,
        tau,
        seed=config.seed,
        uniform_count=args.count,
        oversample_limit=config.evaluation.oversample_limit,
    )
    print(report.model_dump_json())
    if args.out:
        write_json(report, args.out)
    if not report.uniform_stable:
        logger.error(f"Uniform F1 moved by {report.uniform_delta:.4f}, tolerance {report.tolerance}")
        return UNSTABLE_STATUS
    return 0


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("eval", parents=parents, help="Precision, recall, F1 and Chamfer of a mesh")
    parser.add_argument("protocol", choices=list(PROTOCOLS))
    parser.add_argument("--pred", required=True, help="Predicted mesh (.obj or .ply)")
    parser.add_argument("--gt", required=True, help="Ground-truth point cloud (.ply)")
    parser.add_argument("--tau", type=float, help="Distance threshold (default: 1%% of the GT diagonal)")
    parser.add_argument("--crop", help="Evaluation box x0,y0,z0,x1,y1,z1")
    parser.add_argument("--scene", help="Scene whose cameras drive virtual scanning")
    parser.add_argument("--count", type=int, help="Uniform sample count")
    parser.add_argument("--out", help="EvalResult JSON")
    parser.set_defaults(handler=eval_command)

    parser = subparsers.add_parser("bias", parents=parents, help="Tessellation-bias experiment")
    parser.add_argument("--pred", required=True)
    parser.add_argument("--gt", required=True)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--crop")
    parser.add_argument("--count", type=int, default=100_000, help="Uniform sample count")
    parser.add_argument("--out", help="BiasReport JSON")
    parser.set_defaults(handler=bias_command)
