"""Writers and readers for rendered maps.

Color and alpha go to 8-bit PNG (color converted from linear to sRGB).
Depth and normal maps go to a raw float32 file: a 16-byte header
(magic, width, height, channels as little-endian uint32) followed by
row-major pixel data.
"""
import struct
import logging
from pathlib import Path
from typing import Dict, Union

import cv2
import numpy as np

from gwrap.services.errors import ParseError
from .maps import RenderedMaps

logger = logging.getLogger(__name__)

RAW_MAGIC = b"GWMP"
RAW_HEADER = struct.Struct("<4sIII")

PathLike = Union[str, Path]


def linear_to_srgb(values: np.ndarray) -> np.ndarray:
    values = np.clip(values, 0.0, 1.0)
    return np.where(values <= 0.0031308, 12.92 * values, 1.055 * np.power(values, 1.0 / 2.4) - 0.055)


def write_png(path: PathLike, image: np.ndarray, srgb: bool = False) -> None:
    """Write an (H, W) or (H, W, 3) RGB image in [0, 1] as 8-bit PNG."""
    image = np.nan_to_num(np.asarray(image, dtype=float))
    if srgb:
        image = linear_to_srgb(image)
    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    if data.ndim == 3:
        data = cv2.cvtColor(data, cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), data):
        raise OSError(f"could not write {path}")


def write_raw_map(path: PathLike, values: np.ndarray) -> None:
    """Write an (H, W) or (H, W, C) map as header + float32."""
    values = np.asarray(values, dtype=np.float32)
    if values.ndim == 2:
        values = values[..., None]
    height, width, channels = values.shape
    with open(path, "wb") as handle:
        handle.write(RAW_HEADER.pack(RAW_MAGIC, width, height, channels))
        handle.write(np.ascontiguousarray(values).astype("<f4").tobytes())


def read_raw_map(path: PathLike) -> np.ndarray:
    """Read a raw map back as (H, W, C) float32."""
    data = Path(path).read_bytes()
    if len(data) < RAW_HEADER.size:
        raise ParseError(f"{path} is too short for a raw map header")
    magic, width, height, channels = RAW_HEADER.unpack_from(data)
    if magic != RAW_MAGIC:
        raise ParseError(f"{path} has bad magic {magic!r}")
    expected = RAW_HEADER.size + 4 * width * height * channels
    if len(data) != expected:
        raise ParseError(f"{path} holds {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype="<f4", offset=RAW_HEADER.size).reshape(height, width, channels)


def save_maps(maps: RenderedMaps, out_dir: PathLike) -> Dict[str, Path]:
    """Write every map of a render into out_dir.

    Returns:
        Mapping from map name to written path
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "color": out_dir / "color.png",
        "alpha": out_dir / "alpha.png",
        "normal_preview": out_dir / "normal.png",
        "depth": out_dir / "depth.raw",
        "normal": out_dir / "normal.raw",
    }
    write_png(paths["color"], maps.color, srgb=True)
    write_png(paths["alpha"], maps.alpha)
    write_png(paths["normal_preview"], 0.5 * (maps.normal + 1.0))
    write_raw_map(paths["depth"], maps.depth)
    write_raw_map(paths["normal"], maps.normal)
    logger.info(f"Saved {len(paths)} maps to {out_dir}")
    return paths
