"""Neural operators: convolutions, channel rearrangements, normalization,
activation, and resampling, each with an exact vector-Jacobian product.

Shape convention is (n, c, h, w) throughout. All spatial convolutions run at
stride 1 with zero padding of (k-1)/2, so feature maps keep their resolution
through the trunk. Reductions use a fixed tap order (outer loop over kernel
offsets), which keeps results independent of threading in the BLAS layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import ConfigError, ShapeError

SUPPORTED_DW_KERNELS = (3, 5, 7, 9, 11, 13)
SUPPORTED_SCALES = (2, 3, 4)


# ---------------------------------------------------------------- weights

@dataclass(frozen=True)
class ConvWeight:
    """Convolution kernel: coeffs shaped (out_ch, in_ch_per_group, k, k).

    The depth-wise case is groups == in_ch == out_ch with one input channel
    per group.
    """

    coeffs: np.ndarray
    bias: np.ndarray | None = None
    groups: int = 1

    def __post_init__(self):
        o, _, k, k2 = self.coeffs.shape
        if k != k2:
            raise ConfigError(f"kernel must be square, got {k}x{k2}")
        if k % 2 == 0:
            raise ConfigError(f"kernel side must be odd, got {k}")
        if o % self.groups != 0:
            raise ConfigError(f"out_ch {o} not divisible by groups {self.groups}")
        if self.bias is not None and self.bias.shape != (o,):
            raise ShapeError(f"bias shape {self.bias.shape} does not match out_ch {o}")

    @property
    def out_ch(self) -> int:
        return self.coeffs.shape[0]

    @property
    def in_ch_per_group(self) -> int:
        return self.coeffs.shape[1]

    @property
    def k(self) -> int:
        return self.coeffs.shape[2]


@dataclass(frozen=True)
class NormWeight:
    """Per-channel scale for channel layer norm; no shift term."""

    gamma: np.ndarray
    eps: float = 1e-6

    def __post_init__(self):
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")


# ---------------------------------------------------------------- conv
#
# The spatial loop runs over the k*k kernel taps (fixed order, so reductions
# are deterministic); each tap contracts channels with one batched matmul.
# 1x1 kernels skip the padding and tap loop entirely.

def _conv_core(x, coeffs, bias, groups):
    n, c, h, w = x.shape
    o, cpg, k, _ = coeffs.shape
    opg = o // groups
    if k == 1:
        xm = x.reshape(n, groups, cpg, h * w)
        wm = coeffs.reshape(groups, opg, cpg)
        y = np.matmul(wm[None], xm).reshape(n, o, h, w)
    else:
        pad = (k - 1) // 2
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        xg = xp.reshape(n, groups, cpg, h + 2 * pad, w + 2 * pad)
        wg = coeffs.reshape(groups, opg, cpg, k, k)
        acc = np.zeros((n, groups, opg, h * w), dtype=x.dtype)
        for dy in range(k):
            for dx in range(k):
                patch = xg[:, :, :, dy:dy + h, dx:dx + w].reshape(
                    n, groups, cpg, h * w)
                acc += np.matmul(wg[:, :, :, dy, dx][None], patch)
        y = acc.reshape(n, o, h, w)
    if bias is not None:
        y += bias[None, :, None, None]
    return y


def _swap_flip(coeffs, groups):
    # kernel that turns the output cotangent back into the input cotangent:
    # swap in/out channels within each group and rotate spatially by 180
    o, cpg, k, _ = coeffs.shape
    wg = coeffs.reshape(groups, o // groups, cpg, k, k)
    wg = wg.transpose(0, 2, 1, 3, 4)[:, :, :, ::-1, ::-1]
    return np.ascontiguousarray(wg).reshape(groups * cpg, o // groups, k, k)


def _conv_core_vjp(x, coeffs, bias, groups, gy):
    n, c, h, w = x.shape
    o, cpg, k, _ = coeffs.shape
    opg = o // groups
    gx = _conv_core(gy, _swap_flip(coeffs, groups), None, groups)
    gym = gy.reshape(n, groups, opg, h * w)
    if k == 1:
        xm = x.reshape(n, groups, cpg, h * w)
        gcoeffs = np.matmul(gym, xm.transpose(0, 1, 3, 2)).sum(axis=0)
        gcoeffs = gcoeffs.reshape(o, cpg, 1, 1)
    else:
        pad = (k - 1) // 2
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        xg = xp.reshape(n, groups, cpg, h + 2 * pad, w + 2 * pad)
        gcoeffs = np.zeros_like(coeffs)
        gwg = gcoeffs.reshape(groups, opg, cpg, k, k)
        for dy in range(k):
            for dx in range(k):
                patch = xg[:, :, :, dy:dy + h, dx:dx + w].reshape(
                    n, groups, cpg, h * w)
                gwg[:, :, :, dy, dx] = np.matmul(
                    gym, patch.transpose(0, 1, 3, 2)).sum(axis=0)
    gbias = gy.sum(axis=(0, 2, 3)) if bias is not None else None
    return gx, gcoeffs, gbias


def _check_conv(x, w: ConvWeight):
    if x.ndim != 4:
        raise ShapeError(f"expected rank-4 input, got rank {x.ndim}")
    if x.shape[1] != w.groups * w.in_ch_per_group:
        raise ShapeError(
            f"input channels {x.shape[1]} do not match groups {w.groups} x "
            f"in_ch_per_group {w.in_ch_per_group}")


def conv2d(x: np.ndarray, w: ConvWeight) -> np.ndarray:
    """Grouped 2-D convolution, stride 1, zero padding (k-1)/2."""
    _check_conv(x, w)
    return _conv_core(x, w.coeffs, w.bias, w.groups)


def conv2d_vjp(x, w: ConvWeight, gy):
    _check_conv(x, w)
    return _conv_core_vjp(x, w.coeffs, w.bias, w.groups, gy)


def depthwise_conv2d(x: np.ndarray, w: ConvWeight) -> np.ndarray:
    """Depth-wise convolution: one k x k filter per channel, channels never mix."""
    if w.groups != x.shape[1] or w.in_ch_per_group != 1:
        raise ShapeError(
            f"depth-wise conv needs groups == channels ({x.shape[1]}) and one "
            f"input channel per group, got groups={w.groups}, "
            f"in_ch_per_group={w.in_ch_per_group}")
    if w.k not in SUPPORTED_DW_KERNELS:
        raise ConfigError(f"depth-wise kernel {w.k} not in {SUPPORTED_DW_KERNELS}")
    return _conv_core(x, w.coeffs, w.bias, w.groups)


# ------------------------------------------------- channel rearrangements

def channel_split(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split channels into the first and second half."""
    c = x.shape[1]
    if c % 2 != 0:
        raise ConfigError(f"channel_split needs an even channel count, got {c}")
    half = c // 2
    return x[:, :half].copy(), x[:, half:].copy()


def channel_concat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ShapeError(f"cannot concat shapes {a.shape} and {b.shape}")
    return np.concatenate([a, b], axis=1)


def channel_shuffle(x: np.ndarray, g: int) -> np.ndarray:
    """Transpose a (g, c/g) channel grid: output channel j reads input
    channel (j mod g)*(c/g) + (j div g)."""
    n, c, h, w = x.shape
    if c % g != 0:
        raise ConfigError(f"channel count {c} not divisible by group count {g}")
    return x.reshape(n, g, c // g, h, w).transpose(0, 2, 1, 3, 4).reshape(n, c, h, w)


def layer_norm_channels(x: np.ndarray, w: NormWeight) -> np.ndarray:
    """Normalize the channel vector at each (batch, row, col) position to zero
    mean and unit variance (population divisor C), then scale per channel."""
    if w.gamma.shape != (x.shape[1],):
        raise ShapeError(
            f"gamma length {w.gamma.shape} does not match channel count {x.shape[1]}")
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    xhat = (x - mu) / np.sqrt(var + w.eps)
    return w.gamma[None, :, None, None] * xhat


def layer_norm_channels_vjp(x, w: NormWeight, gy):
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + w.eps)
    xhat = (x - mu) * inv
    ggamma = (gy * xhat).sum(axis=(0, 2, 3))
    gxh = gy * w.gamma[None, :, None, None]
    gx = inv * (gxh
                - gxh.mean(axis=1, keepdims=True)
                - xhat * (gxh * xhat).mean(axis=1, keepdims=True))
    return gx, ggamma


# ---------------------------------------------------------------- silu

def _sigmoid(x):
    # overflow-safe: exp argument is always <= 0
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def silu(x: np.ndarray) -> np.ndarray:
    return x * _sigmoid(x)


def silu_vjp(x, gy):
    s = _sigmoid(x)
    return gy * (s * (1.0 + x * (1.0 - s)))


# -------------------------------------------------------- pixel shuffle

def pixel_shuffle(x: np.ndarray, r: int) -> np.ndarray:
    """Rearrange r*r channel groups into an r-times upscaled image."""
    n, c, h, w = x.shape
    if c % (r * r) != 0:
        raise ConfigError(f"channel count {c} not divisible by r^2 = {r * r}")
    co = c // (r * r)
    y = x.reshape(n, co, r, r, h, w).transpose(0, 1, 4, 2, 5, 3)
    return np.ascontiguousarray(y.reshape(n, co, h * r, w * r))


def pixel_unshuffle(x: np.ndarray, r: int) -> np.ndarray:
    """Exact inverse of pixel_shuffle."""
    n, c, h, w = x.shape
    if h % r != 0 or w % r != 0:
        raise ConfigError(f"spatial dims ({h}, {w}) not divisible by r = {r}")
    y = x.reshape(n, c, h // r, r, w // r, r).transpose(0, 1, 3, 5, 2, 4)
    return np.ascontiguousarray(y.reshape(n, c * r * r, h // r, w // r))


# ------------------------------------------------------------- resampling
#
# Both resizes use half-pixel centers (src = (dst + 0.5)/scale - 0.5) with
# edge clamping, expressed as separable per-axis tap tables (indices plus
# weights). The adjoint is then a scatter-add with the same tables.

def _apply_taps(x, idx, wgt, axis):
    moved = np.moveaxis(x, axis, -1)
    out = (moved[..., idx] * wgt).sum(axis=-1)
    return np.ascontiguousarray(np.moveaxis(out, -1, axis))


def _apply_taps_adjoint(g, idx, wgt, axis, in_len):
    gm = np.moveaxis(g, axis, -1)
    shape = gm.shape[:-1] + (in_len,)
    out = np.zeros(shape, dtype=g.dtype)
    for t in range(idx.shape[1]):
        np.add.at(out, (Ellipsis, idx[:, t]), gm * wgt[:, t])
    return np.ascontiguousarray(np.moveaxis(out, -1, axis))


def _linear_taps(in_len, scale):
    out_len = in_len * scale
    src = (np.arange(out_len) + 0.5) / scale - 0.5
    src = np.clip(src, 0.0, in_len - 1.0)
    i0 = np.minimum(np.floor(src).astype(np.int64), in_len - 1)
    frac = src - i0
    i1 = np.minimum(i0 + 1, in_len - 1)
    idx = np.stack([i0, i1], axis=1)
    wgt = np.stack([1.0 - frac, frac], axis=1)
    return idx, wgt.astype(tensor.dtype())


def bilinear_resize(x: np.ndarray, s: int) -> np.ndarray:
    """Upscale by an integer factor with half-pixel-center bilinear sampling."""
    if s not in SUPPORTED_SCALES:
        raise ConfigError(f"scale {s} not in {SUPPORTED_SCALES}")
    ri, rw = _linear_taps(x.shape[2], s)
    ci, cw = _linear_taps(x.shape[3], s)
    return _apply_taps(_apply_taps(x, ri, rw, 2), ci, cw, 3)


def bilinear_resize_vjp(x, s, gy):
    ri, rw = _linear_taps(x.shape[2], s)
    ci, cw = _linear_taps(x.shape[3], s)
    g = _apply_taps_adjoint(gy, ci, cw, 3, x.shape[3])
    return _apply_taps_adjoint(g, ri, rw, 2, x.shape[2])


def _cubic_kernel(t):
    # a = -0.5 cubic, the common photographic resampling kernel
    at = np.abs(t)
    return np.where(at <= 1.0,
                    1.5 * at ** 3 - 2.5 * at ** 2 + 1.0,
                    np.where(at < 2.0,
                             -0.5 * at ** 3 + 2.5 * at ** 2 - 4.0 * at + 2.0,
                             0.0))


def _cubic_taps(in_len, scale):
    out_len = max(1, int(round(in_len * scale)))
    src = (np.arange(out_len) + 0.5) / scale - 0.5
    # downscale widens the kernel support by 1/scale (antialias)
    kscale = scale if scale < 1.0 else 1.0
    support = 2.0 / kscale
    n_taps = int(np.ceil(2.0 * support)) + 2
    kmin = np.floor(src - support).astype(np.int64) + 1
    idx = kmin[:, None] + np.arange(n_taps)[None, :]
    wgt = _cubic_kernel((src[:, None] - idx) * kscale)
    wgt = wgt / wgt.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, in_len - 1)
    return idx, wgt.astype(tensor.dtype())


def bicubic_resize(x: np.ndarray, scale: float) -> np.ndarray:
    """Cubic resampling at any positive scale, antialiased when downscaling."""
    if scale <= 0:
        raise ConfigError(f"scale must be positive, got {scale}")
    ri, rw = _cubic_taps(x.shape[2], scale)
    ci, cw = _cubic_taps(x.shape[3], scale)
    return _apply_taps(_apply_taps(x, ri, rw, 2), ci, cw, 3)


def bicubic_resize_vjp(x, scale, gy):
    ri, rw = _cubic_taps(x.shape[2], scale)
    ci, cw = _cubic_taps(x.shape[3], scale)
    g = _apply_taps_adjoint(gy, ci, cw, 3, x.shape[3])
    return _apply_taps_adjoint(g, ri, rw, 2, x.shape[2])


# ----------------------------------------------------------- vjp dispatch
#
# Rearrangement ops (split/concat/shuffle/pixel shuffle) are permutations, so
# their pull-back is the exact inverse rearrangement of the cotangent.

def _vjp_elementwise_add(inputs, g):
    return g, g


def _vjp_elementwise_sub(inputs, g):
    return g, -g


def _vjp_elementwise_mul(inputs, g):
    a, b = inputs
    return g * b, g * a


def _vjp_conv2d(inputs, g):
    x, w = inputs
    return conv2d_vjp(x, w, g)


def _vjp_channel_split(inputs, g):
    ga, gb = g
    return (np.concatenate([ga, gb], axis=1),)


def _vjp_channel_concat(inputs, g):
    a, _ = inputs
    ca = a.shape[1]
    return g[:, :ca].copy(), g[:, ca:].copy()


def _vjp_channel_shuffle(inputs, g):
    x, groups = inputs
    return (channel_shuffle(g, x.shape[1] // groups),)


def _vjp_layer_norm(inputs, g):
    x, w = inputs
    return layer_norm_channels_vjp(x, w, g)


def _vjp_silu(inputs, g):
    (x,) = inputs
    return (silu_vjp(x, g),)


def _vjp_pixel_shuffle(inputs, g):
    _, r = inputs
    return (pixel_unshuffle(g, r),)


def _vjp_bilinear(inputs, g):
    x, s = inputs
    return (bilinear_resize_vjp(x, s, g),)


def _vjp_bicubic(inputs, g):
    x, scale = inputs
    return (bicubic_resize_vjp(x, scale, g),)


_VJP_RULES = {
    "elementwise_add": _vjp_elementwise_add,
    "elementwise_sub": _vjp_elementwise_sub,
    "elementwise_mul": _vjp_elementwise_mul,
    "conv2d": _vjp_conv2d,
    "depthwise_conv2d": _vjp_conv2d,
    "channel_split": _vjp_channel_split,
    "channel_concat": _vjp_channel_concat,
    "channel_shuffle": _vjp_channel_shuffle,
    "layer_norm_channels": _vjp_layer_norm,
    "silu": _vjp_silu,
    "pixel_shuffle": _vjp_pixel_shuffle,
    "bilinear_resize": _vjp_bilinear,
    "bicubic_resize": _vjp_bicubic,
}


def register_vjp(op_id: str, rule) -> None:
    """Hook for loss modules to add their own pull-back rules."""
    _VJP_RULES[op_id] = rule


def vjp(op_id: str, inputs: tuple, output_cotangent):
    """Vector-Jacobian product of a named forward op.

    `inputs` are the op's forward arguments; the return value carries one
    cotangent per differentiable input, in argument order.
    """
    if op_id not in _VJP_RULES:
        raise ConfigError(f"unknown op id {op_id!r}")
    return _VJP_RULES[op_id](inputs, output_cotangent)
