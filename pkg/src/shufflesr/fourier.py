"""2-D discrete Fourier transform and the spectral L1 penalty.

The transform is unnormalized (X[u,v] = sum x[y,x] e^{-2 pi i (uy/h + vx/w)}),
applied separably rows-then-columns per (batch, channel) slice. Power-of-two
lengths go through an iterative radix-2 butterfly; every other length goes
through Bluestein's chirp-z reformulation, which reduces an arbitrary-length
DFT to a power-of-two cyclic convolution. The inverse carries the 1/(h*w)
normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops, tensor


@dataclass(frozen=True)
class ComplexPlane:
    """Spectrum of a rank-4 tensor: real and imaginary parts, same shape."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        tensor.require_same_shape(self.re, self.im)


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.int64)
    for i in range(1, n):
        rev[i] = (rev[i >> 1] >> 1) | ((i & 1) << (bits - 1))
    return rev


def _dft_pow2(a: np.ndarray, sign: int) -> np.ndarray:
    """Iterative radix-2 transform over the last axis (length must be 2^m)."""
    n = a.shape[-1]
    if n == 1:
        return a.copy()
    out = a[..., _bit_reverse_indices(n)]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / size).astype(a.dtype)
        view = out.reshape(out.shape[:-1] + (n // size, size))
        even = view[..., :half].copy()
        odd = view[..., half:] * tw
        view[..., :half] = even + odd
        view[..., half:] = even - odd
        size *= 2
    return out


def _next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def _dft_bluestein(a: np.ndarray, sign: int) -> np.ndarray:
    """Chirp-z transform over the last axis, any length."""
    n = a.shape[-1]
    k = np.arange(n, dtype=np.int64)
    # k^2 mod 2n keeps the phase argument small and the twiddles accurate
    chirp = np.exp(sign * 1j * np.pi * ((k * k) % (2 * n)) / n).astype(a.dtype)
    m = _next_pow2(2 * n - 1)
    fa = np.zeros(a.shape[:-1] + (m,), dtype=a.dtype)
    fa[..., :n] = a * chirp
    fb = np.zeros(m, dtype=a.dtype)
    fb[:n] = np.conj(chirp)
    fb[m - n + 1:] = np.conj(chirp[1:])[::-1]
    conv = _dft_pow2(_dft_pow2(fa, -1) * _dft_pow2(fb, -1), +1) / m
    return conv[..., :n] * chirp


def _dft_last_axis(a: np.ndarray, sign: int) -> np.ndarray:
    n = a.shape[-1]
    if n & (n - 1) == 0:
        return _dft_pow2(a, sign)
    return _dft_bluestein(a, sign)


def _dft2(a: np.ndarray, sign: int) -> np.ndarray:
    a = _dft_last_axis(a, sign)
    a = np.swapaxes(_dft_last_axis(np.swapaxes(a, -1, -2), sign), -1, -2)
    return a


def fft2d(x: np.ndarray) -> ComplexPlane:
    """Unnormalized forward DFT of each (batch, channel) slice."""
    a = _dft2(x.astype(tensor.complex_dtype()), -1)
    return ComplexPlane(np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag))


def ifft2d(spectrum: ComplexPlane) -> ComplexPlane:
    """Inverse DFT with 1/(h*w) normalization."""
    a = (spectrum.re + 1j * spectrum.im).astype(tensor.complex_dtype())
    h, w = a.shape[-2:]
    a = _dft2(a, +1) / (h * w)
    return ComplexPlane(np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag))


# ---------------------------------------------------------------- loss

def frequency_loss(sr: np.ndarray, gt: np.ndarray) -> float:
    """Mean over all bins of |d re| + |d im| between the two spectra."""
    tensor.require_same_shape(sr, gt)
    fs = fft2d(sr)
    fg = fft2d(gt)
    n = sr.size
    return float((np.abs(fs.re - fg.re).sum() + np.abs(fs.im - fg.im).sum()) / n)


def frequency_loss_vjp(sr, gt, g: float):
    """Pull-back through the spectral penalty.

    The adjoint of the unnormalized forward transform is the unnormalized
    inverse, i.e. h*w times ifft2d.
    """
    fs = fft2d(sr)
    fg = fft2d(gt)
    n = sr.size
    h, w = sr.shape[-2:]
    signs = ComplexPlane(np.sign(fs.re - fg.re), np.sign(fs.im - fg.im))
    back = ifft2d(signs)
    gsr = (g * h * w / n) * back.re.astype(sr.dtype)
    return gsr, -gsr


ops.register_vjp("frequency_loss",
                 lambda inputs, g: frequency_loss_vjp(inputs[0], inputs[1], g))
