"""Evaluation measures: luma PSNR and SSIM with border shaving.

Inputs are (n, c, h, w) tensors. rgb_to_y maps [0, 1] RGB onto the limited
range 0-255 luma scale (BT.601: Y = 16 + 65.481 R + 128.553 G + 24.966 B);
psnr and ssim expect inputs already on the 0-255 scale. Metrics compute in
float64 regardless of the runtime precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ConfigError, ShapeError
from .tensor import require_same_shape

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2


@dataclass(frozen=True)
class EvalProtocol:
    """shave: border pixels removed on each side (conventionally the scale)."""

    shave: int = 0
    y_only: bool = True
    data_range: float = 255.0

    def __post_init__(self):
        if self.shave < 0:
            raise ConfigError(f"shave must be >= 0, got {self.shave}")


def rgb_to_y(img: np.ndarray) -> np.ndarray:
    """Luma plane of an RGB tensor in [0, 1], returned on the 0-255 scale."""
    if img.ndim != 4 or img.shape[1] != 3:
        raise ShapeError(f"expected (n, 3, h, w), got {img.shape}")
    r, g, b = (img[:, i:i + 1].astype(np.float64) for i in range(3))
    return 16.0 + 65.481 * r + 128.553 * g + 24.966 * b


def _shaved(a: np.ndarray, shave: int) -> np.ndarray:
    if shave == 0:
        return a
    if 2 * shave >= a.shape[2] or 2 * shave >= a.shape[3]:
        raise ConfigError(f"shave {shave} leaves no pixels for shape {a.shape}")
    return a[:, :, shave:-shave, shave:-shave]


def psnr(a: np.ndarray, b: np.ndarray, proto: EvalProtocol = EvalProtocol()) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs return +inf."""
    require_same_shape(a, b)
    av = _shaved(a, proto.shave).astype(np.float64)
    bv = _shaved(b, proto.shave).astype(np.float64)
    mse = np.mean((av - bv) ** 2)
    if mse == 0.0:
        return math.inf
    return float(10.0 * np.log10(proto.data_range ** 2 / mse))


def _gaussian_1d(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _window_mean(x: np.ndarray, kern: np.ndarray) -> np.ndarray:
    # separable valid-mode correlation: filter both axes, crop the borders
    pad = (len(kern) - 1) // 2
    y = correlate1d(x, kern, axis=-1, mode="constant")
    y = correlate1d(y, kern, axis=-2, mode="constant")
    return y[..., pad:-pad, pad:-pad]


def ssim(a: np.ndarray, b: np.ndarray, proto: EvalProtocol = EvalProtocol()) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows."""
    require_same_shape(a, b)
    av = _shaved(a, proto.shave).astype(np.float64)
    bv = _shaved(b, proto.shave).astype(np.float64)
    if av.shape[2] < _SSIM_WINDOW or av.shape[3] < _SSIM_WINDOW:
        raise ConfigError(
            f"image {av.shape[2]}x{av.shape[3]} smaller than the "
            f"{_SSIM_WINDOW}x{_SSIM_WINDOW} window")
    kern = _gaussian_1d(_SSIM_WINDOW, _SSIM_SIGMA)
    mu_a = _window_mean(av, kern)
    mu_b = _window_mean(bv, kern)
    var_a = _window_mean(av * av, kern) - mu_a ** 2
    var_b = _window_mean(bv * bv, kern) - mu_b ** 2
    cov = _window_mean(av * bv, kern) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + _C1) * (2.0 * cov + _C2)
    den = (mu_a ** 2 + mu_b ** 2 + _C1) * (var_a + var_b + _C2)
    return float(np.mean(num / den))
