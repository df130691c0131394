"""Versioned text format for Gaussian scenes.

Layout::

    gwrap-scene 1
    gaussians <N>
    g mean[3] scales[3] rotation[4] opacity normal_sign normal_dir[3] color[3]
    ...
    cameras <C>
    c fx fy cx cy width height world_from_camera[12]
    ...

Floats are written with 17 significant digits so a save/load round trip is
exact. Blank lines and lines starting with '#' are ignored. A file without
a camera block loads with no cameras.
"""
import logging
from pathlib import Path
from typing import Iterator, List, Tuple, Union

from pydantic import ValidationError

from gwrap.api.models import CameraRecord, CoreConfig, GaussianRecord
from gwrap.services.core import GaussianScene, OrientedGaussian, PinholeCamera
from gwrap.services.errors import BadParams, ParseError, VersionMismatch

logger = logging.getLogger(__name__)

MAGIC = "gwrap-scene"
FORMAT_VERSION = 1
GAUSSIAN_FIELDS = (
    ("mean", 3), ("scales", 3), ("rotation", 4), ("opacity", 1),
    ("normal_sign", 1), ("normal_dir", 3), ("color", 3),
)
CAMERA_FIELDS = (
    ("fx", 1), ("fy", 1), ("cx", 1), ("cy", 1), ("width", 1), ("height", 1), ("world_from_camera", 12),
)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def format_scene(scene: GaussianScene) -> str:
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"gaussians {len(scene.gaussians)}"]
    for g in scene.gaussians:
        values = [*g.mean, *g.scales, *g.rotation, g.opacity, g.normal_sign, *g.normal_dir, *g.color]
        lines.append("g " + " ".join(_fmt(v) for v in values))
    lines.append(f"cameras {len(scene.cameras)}")
    for c in scene.cameras:
        pose = [v for row in c.world_from_camera for v in row]
        values = [_fmt(c.fx), _fmt(c.fy), _fmt(c.cx), _fmt(c.cy), str(c.width), str(c.height)]
        lines.append("c " + " ".join(values + [_fmt(v) for v in pose]))
    return "\n".join(lines) + "\n"


def save_scene(scene: GaussianScene, path: Union[str, Path]) -> None:
    """Write a scene in the text format."""
    Path(path).write_text(format_scene(scene), encoding="utf-8")
    logger.info(f"Saved scene with {len(scene)} Gaussians and {len(scene.cameras)} cameras to {path}")


def _content_lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            yield number, stripped.split()


def _split_fields(tokens: List[str], layout, line: int, record: int) -> dict:
    expected = sum(width for _, width in layout)
    if len(tokens) != expected:
        raise ParseError(f"expected {expected} values, got {len(tokens)}", line=line, record=record)
    values = {}
    offset = 0
    for name, width in layout:
        chunk = tokens[offset:offset + width]
        try:
            numbers = [float(v) for v in chunk]
        except ValueError:
            raise ParseError(f"not a number: {' '.join(chunk)}", line=line, field=name, record=record)
        values[name] = numbers[0] if width == 1 else tuple(numbers)
        offset += width
    return values


def _record_error(exc: ValidationError, line: int, record: int) -> ParseError:
    first = exc.errors()[0]
    field = ".".join(str(p) for p in first.get("loc", ())) or None
    return ParseError(first.get("msg", "invalid record"), line=line, field=field, record=record)


def _parse_count(lines, keyword: str) -> Tuple[int, int]:
    try:
        number, tokens = next(lines)
    except StopIteration:
        raise ParseError(f"missing '{keyword}' block header")
    if len(tokens) != 2 or tokens[0] != keyword or not tokens[1].isdigit():
        raise ParseError(f"expected '{keyword} <count>'", line=number)
    return number, int(tokens[1])


def parse_scene(text: str, config: CoreConfig = None) -> GaussianScene:
    """Parse the text format.

    Raises:
        ParseError: Malformed header, record or value, with line and record context
        VersionMismatch: Unknown format version
    """
    lines = _content_lines(text)
    try:
        number, header = next(lines)
    except StopIteration:
        raise ParseError("empty scene file")
    if len(header) != 2 or header[0] != MAGIC:
        raise ParseError(f"expected '{MAGIC} <version>' header", line=number)
    if header[1] != str(FORMAT_VERSION):
        raise VersionMismatch(f"scene format version {header[1]} is not supported (expected {FORMAT_VERSION})")

    _, count = _parse_count(lines, "gaussians")
    gaussians = []
    for record in range(count):
        try:
            number, tokens = next(lines)
        except StopIteration:
            raise ParseError(f"file ends after {record} of {count} Gaussians", record=record)
        if tokens[0] != "g":
            raise ParseError("expected a Gaussian record", line=number, record=record)
        values = _split_fields(tokens[1:], GAUSSIAN_FIELDS, number, record)
        try:
            r = GaussianRecord(**values)
            gaussians.append(OrientedGaussian(r.mean, r.scales, r.rotation, r.opacity, r.normal_sign, r.normal_dir, r.color))
        except ValidationError as exc:
            raise _record_error(exc, number, record)
        except BadParams as exc:
            raise ParseError(exc.message, line=number, record=record)

    cameras = []
    try:
        number, tokens = next(lines)
    except StopIteration:
        logger.warning("Scene file has no camera block; loaded without cameras")
        tokens = None
    if tokens is not None:
        if len(tokens) != 2 or tokens[0] != "cameras" or not tokens[1].isdigit():
            raise ParseError("expected 'cameras <count>'", line=number)
        for record in range(int(tokens[1])):
            try:
                number, tokens = next(lines)
            except StopIteration:
                raise ParseError(f"file ends after {record} cameras", record=record)
            if tokens[0] != "c":
                raise ParseError("expected a camera record", line=number, record=record)
            values = _split_fields(tokens[1:], CAMERA_FIELDS, number, record)
            for name in ("width", "height"):
                if not float(values[name]).is_integer():
                    raise ParseError("image size must be an integer", line=number, field=name, record=record)
                values[name] = int(values[name])
            try:
                r = CameraRecord(**values)
                cameras.append(PinholeCamera(r.fx, r.fy, r.cx, r.cy, r.width, r.height, r.world_from_camera))
            except ValidationError as exc:
                raise _record_error(exc, number, record)
            except BadParams as exc:
                raise ParseError(exc.message, line=number, record=record)
        trailing = next(lines, None)
        if trailing is not None:
            raise ParseError("unexpected content after the camera block", line=trailing[0])

    try:
        return GaussianScene(gaussians, cameras, config)
    except BadParams as exc:
        raise ParseError(exc.message, record=exc.context.get("index"))


def load_scene(path: Union[str, Path], config: CoreConfig = None) -> GaussianScene:
    """Read a scene file.

    Args:
        path: Scene file path
        config: Core constants for the loaded scene

    Returns:
        GaussianScene
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"scene file {path} does not exist")
    scene = parse_scene(path.read_text(encoding="utf-8"), config)
    logger.info(f"Loaded scene with {len(scene)} Gaussians and {len(scene.cameras)} cameras from {path}")
    return scene
