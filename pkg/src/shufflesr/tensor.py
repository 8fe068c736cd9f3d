"""Rank-4 tensor layout, global precision control, and elementwise arithmetic.

Every array handled by this package is a C-contiguous numpy array of shape
(n, c, h, w): batch, channel, row, column, with column fastest in memory, so
element (i, j, y, x) sits at flat offset ((i*c + j)*h + y)*w + x.

Precision is a single global switch (float32 for runtime paths, float64 for
verification paths) instead of a per-array attribute; gradient checks need the
whole pipeline widened at once, and mixing precisions per array invites
silent casts.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import ConfigError, ShapeError

_PRECISIONS = {
    "float32": (np.float32, np.complex64),
    "float64": (np.float64, np.complex128),
}

_active = "float32"


def set_precision(name: str) -> None:
    global _active
    if name not in _PRECISIONS:
        raise ConfigError(f"unknown precision {name!r}; expected one of {sorted(_PRECISIONS)}")
    _active = name


def get_precision() -> str:
    return _active


def dtype() -> np.dtype:
    """Real dtype of the active precision."""
    return np.dtype(_PRECISIONS[_active][0])


def complex_dtype() -> np.dtype:
    """Complex dtype matching the active precision."""
    return np.dtype(_PRECISIONS[_active][1])


@contextlib.contextmanager
def use_precision(name: str):
    """Temporarily switch the global precision (use in verification code)."""
    previous = _active
    set_precision(name)
    try:
        yield
    finally:
        set_precision(previous)


def tensor4(values, shape: tuple[int, int, int, int]) -> np.ndarray:
    """Build an (n, c, h, w) tensor from flat values in canonical order."""
    n, c, h, w = shape
    flat = np.asarray(values, dtype=dtype()).reshape(-1)
    if flat.size != n * c * h * w:
        raise ShapeError(f"got {flat.size} values for shape {shape} "
                         f"({n * c * h * w} expected)")
    return np.ascontiguousarray(flat.reshape(n, c, h, w))


def asarray4(x) -> np.ndarray:
    """Coerce to a contiguous rank-4 array in the active precision."""
    a = np.ascontiguousarray(np.asarray(x, dtype=dtype()))
    if a.ndim != 4:
        raise ShapeError(f"expected a rank-4 array, got rank {a.ndim}")
    return a


def zeros(n: int, c: int, h: int, w: int) -> np.ndarray:
    return np.zeros((n, c, h, w), dtype=dtype())


_AXIS_NAMES = ("batch", "channel", "row", "column")


def flat_index(t, i: int, j: int, y: int, x: int) -> int:
    """Flat offset of element (i, j, y, x) in the canonical layout.

    Out-of-range indices raise IndexError naming the offending axis.
    """
    shape = t.shape if hasattr(t, "shape") else tuple(t)
    n, c, h, w = shape
    for name, idx, size in zip(_AXIS_NAMES, (i, j, y, x), shape):
        if not 0 <= idx < size:
            raise IndexError(f"{name} index {idx} out of range [0, {size})")
    return ((i * c + j) * h + y) * w + x


def require_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


_ELEMENTWISE = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


def elementwise(a: np.ndarray, b: np.ndarray, op: str) -> np.ndarray:
    """Pointwise add/sub/mul of two same-shape tensors."""
    if op not in _ELEMENTWISE:
        raise ConfigError(f"unknown elementwise op {op!r}; expected one of {sorted(_ELEMENTWISE)}")
    require_same_shape(a, b)
    return _ELEMENTWISE[op](a, b)


def require_finite(t: np.ndarray, what: str = "tensor") -> np.ndarray:
    if not np.isfinite(t).all():
        raise FloatingPointError(f"{what} contains non-finite values")
    return t
