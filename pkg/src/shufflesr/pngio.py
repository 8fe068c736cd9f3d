"""8-bit RGB PNG decode/encode.

Decoded pixels map to [0, 1] via v/255; encoding clamps to [0, 1] and
quantizes with round-half-away-from-zero so repeated runs produce
byte-identical files.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import tensor
from .errors import ShapeError


class ImageIOError(Exception):
    pass


def read_png(path) -> np.ndarray:
    """Decode to a (1, 3, h, w) tensor in [0, 1]."""
    try:
        with Image.open(path) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise ImageIOError(f"cannot read image {path}: {exc}") from exc
    arr = rgb.astype(tensor.dtype()) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1)[None])


def quantize(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize to the 8-bit grid, result still in [0, 1]."""
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5) / 255.0


def write_png(img: np.ndarray, path) -> None:
    """Encode a (1, 3, h, w) tensor; values are clamped and quantized."""
    if img.ndim != 4 or img.shape[0] != 1 or img.shape[1] != 3:
        raise ShapeError(f"expected (1, 3, h, w), got {img.shape}")
    u8 = np.floor(np.clip(img[0], 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    try:
        Image.fromarray(u8.transpose(1, 2, 0), mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write image {path}: {exc}") from exc
