"""Independent reference implementations used as test oracles.

Everything here is written the slow, obvious way (scalar loops, textbook
formulas) on purpose: these functions must not share code paths with the
library under test.
"""

import math

import numpy as np


def conv2d_loops(x, coeffs, bias, groups):
    """Quadruple-loop grouped convolution, stride 1, zero pad (k-1)/2."""
    n, c, h, w = x.shape
    o, cpg, k, _ = coeffs.shape
    pad = (k - 1) // 2
    opg = o // groups
    y = np.zeros((n, o, h, w), dtype=np.float64)
    for b in range(n):
        for oc in range(o):
            gi = oc // opg
            for yy in range(h):
                for xx in range(w):
                    acc = 0.0
                    for ci in range(cpg):
                        cin = gi * cpg + ci
                        for dy in range(k):
                            for dx in range(k):
                                sy, sx = yy + dy - pad, xx + dx - pad
                                if 0 <= sy < h and 0 <= sx < w:
                                    acc += coeffs[oc, ci, dy, dx] * x[b, cin, sy, sx]
                    y[b, oc, yy, xx] = acc + (bias[oc] if bias is not None else 0.0)
    return y


def dft2_matrix(x2d):
    """Naive O(N^2) 2-D DFT of one (h, w) slice via explicit DFT matrices."""
    h, w = x2d.shape
    fh = np.exp(-2j * np.pi * np.outer(np.arange(h), np.arange(h)) / h)
    fw = np.exp(-2j * np.pi * np.outer(np.arange(w), np.arange(w)) / w)
    return fh @ x2d.astype(np.complex128) @ fw.T


def cubic_kernel_scalar(t):
    at = abs(t)
    if at <= 1.0:
        return 1.5 * at ** 3 - 2.5 * at ** 2 + 1.0
    if at < 2.0:
        return -0.5 * at ** 3 + 2.5 * at ** 2 - 4.0 * at + 2.0
    return 0.0


def bicubic_1d_loops(x, scale):
    """Direct kernel-evaluate-and-sample cubic resample of a 1-D signal."""
    n = len(x)
    out_len = max(1, int(round(n * scale)))
    kscale = min(scale, 1.0)
    support = 2.0 / kscale
    out = np.zeros(out_len, dtype=np.float64)
    for j in range(out_len):
        src = (j + 0.5) / scale - 0.5
        lo = math.floor(src - support)
        hi = math.ceil(src + support) + 1
        acc = 0.0
        wsum = 0.0
        for kk in range(lo, hi):
            wgt = cubic_kernel_scalar((src - kk) * kscale)
            idx = min(max(kk, 0), n - 1)
            acc += wgt * x[idx]
            wsum += wgt
        out[j] = acc / wsum
    return out


def psnr_straight_line(a, b, data_range=255.0):
    diff = (a.astype(np.float64) - b.astype(np.float64)).ravel()
    mse = float(np.dot(diff, diff)) / diff.size
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(data_range * data_range / mse)


def ssim_window_loops(a, b):
    """Per-window double loop over valid 11x11 Gaussian windows (sigma 1.5)."""
    size, sigma = 11, 1.5
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g1 = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    g1 /= g1.sum()
    kern = np.outer(g1, g1)
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    h, w = a.shape
    vals = []
    for i in range(h - size + 1):
        for j in range(w - size + 1):
            wa = a[i:i + size, j:j + size].astype(np.float64)
            wb = b[i:i + size, j:j + size].astype(np.float64)
            mua = (kern * wa).sum()
            mub = (kern * wb).sum()
            va = (kern * wa * wa).sum() - mua ** 2
            vb = (kern * wb * wb).sum() - mub ** 2
            cov = (kern * wa * wb).sum() - mua * mub
            vals.append(((2 * mua * mub + c1) * (2 * cov + c2))
                        / ((mua ** 2 + mub ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def max_rel_err(a, b, floor=1e-4):
    """Worst per-coordinate relative error with an absolute floor.

    Coordinates below the floor are compared absolutely at floor*tol, which
    sits well above central-difference roundoff (~1e-10) while still
    catching genuinely wrong pull-backs.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def fd_grad(f, x, eps=1e-5):
    """Central finite differences of a scalar function w.r.t. every element."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f()
        flat[i] = orig - eps
        lo = f()
        flat[i] = orig
        gf[i] = (hi - lo) / (2 * eps)
    return g
