"""Options and helpers shared by every subcommand."""
import argparse
import logging
from typing import List, Optional

from pydantic import ValidationError

from gwrap.api.models import Box, RunConfig
from gwrap.services.cli_io import load_config, load_scene
from gwrap.services.core import GaussianScene
from gwrap.services.errors import BadParams

logger = logging.getLogger(__name__)


def common_parser() -> argparse.ArgumentParser:
    """Parent parser with --config, --seed and --verbose."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--seed", type=int, help="Override the configured seed")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    """Run configuration from --config with the --seed override applied.

    A fields section without its own seed draws the vacancy camera subset
    with the run seed.
    """
    config = load_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    if config.fields.seed is None:
        config = config.model_copy(update={"fields": config.fields.model_copy(update={"seed": config.seed})})
    return config


def scene_from(args: argparse.Namespace, config: RunConfig) -> GaussianScene:
    return load_scene(args.scene, config.core)


def parse_floats(text: str, count: int, name: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise BadParams(f"{name} must be {count} comma-separated numbers", value=text)
    if len(values) != count:
        raise BadParams(f"{name} must be {count} comma-separated numbers", value=text)
    return values


def parse_box(text: Optional[str], name: str = "box") -> Optional[Box]:
    """Box from 'x0,y0,z0,x1,y1,z1'."""
    if text is None:
        return None
    values = parse_floats(text, 6, name)
    try:
        return Box(lo=tuple(values[:3]), hi=tuple(values[3:]))
    except ValidationError:
        raise BadParams(f"{name} lower corner must not exceed its upper corner", value=text)


def parse_counts(text: str) -> List[int]:
    """Grid resolution from 'NX,NY,NZ'."""
    counts = parse_floats(text, 3, "grid")
    if any(c < 1 or not float(c).is_integer() for c in counts):
        raise BadParams("grid counts must be positive integers", value=text)
    return [int(c) for c in counts]
