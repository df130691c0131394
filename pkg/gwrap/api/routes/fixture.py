"""Synthetic scene and run-configuration subcommands."""
import logging

from pydantic import ValidationError

from gwrap.api.models import FixtureKind, FixtureParams, RunConfig
from gwrap.services.cli_io import dump_config, make_fixture, save_cloud, save_scene, surface_points
from gwrap.services.errors import BadParams
from .common import run_config

logger = logging.getLogger(__name__)


def fixture_command(args) -> int:
    config = run_config(args)
    try:
        params = FixtureParams.parse(args.params)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise BadParams(f"invalid fixture parameter: {first.get('msg')}", field=".".join(map(str, first.get("loc", ()))))
    kind = FixtureKind(args.kind)
    save_scene(make_fixture(kind, params), args.out)
    if args.gt_out:
        save_cloud(surface_points(kind, params, args.gt_count, config.seed), args.gt_out)
    return 0


def config_command(args) -> int:
    config = RunConfig() if args.dump_defaults else run_config(args)
    text = dump_config(config, args.out)
    if not args.out:
        print(text, end="")
    return 0


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("fixture", parents=parents, help="Write a synthetic wrapped scene")
    parser.add_argument("--kind", required=True, choices=[k.value for k in FixtureKind])
    parser.add_argument("--params", help="Generator parameters key=value,key=value")
    parser.add_argument("--out", required=True, help="Scene file")
    parser.add_argument("--gt-out", help="Analytic surface samples (.ply)")
    parser.add_argument("--gt-count", type=int, default=100_000)
    parser.set_defaults(handler=fixture_command)

    parser = subparsers.add_parser("config", parents=parents, help="Print or write a run configuration")
    parser.add_argument("--dump-defaults", action="store_true", help="Defaults instead of the resolved --config")
    parser.add_argument("--out", help="YAML file to write")
    parser.set_defaults(handler=config_command)
