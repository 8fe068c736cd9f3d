"""A tour of the core operators: convolutions, channel rearrangements,
normalization, and resampling, with the little identities that make each one
easy to trust.

Run:  python3 demos/01_operator_tour.py
"""

import numpy as np

from shufflesr import ops, tensor

rng = np.random.default_rng(0)

print("== depth-wise convolution ==")
x = tensor.asarray4(rng.standard_normal((1, 4, 6, 6)))
delta = np.zeros((4, 1, 3, 3), dtype=tensor.dtype())
delta[:, 0, 1, 1] = 1.0
y = ops.depthwise_conv2d(x, ops.ConvWeight(delta, groups=4))
print(f"delta kernel acts as identity: max |y - x| = {np.abs(y - x).max():.2e}")

x2 = x.copy()
x2[0, 0] += 100.0
y2 = ops.depthwise_conv2d(x2, ops.ConvWeight(delta, groups=4))
print("channels never mix: other channels bit-identical after perturbing ch 0:",
      np.array_equal(y[:, 1:], y2[:, 1:]))

print()
print("== channel split and shuffle ==")
z = np.arange(8, dtype=np.float32).reshape(1, 8, 1, 1)
a, b = ops.channel_split(z)
print("split halves:", a.ravel().tolist(), "/", b.ravel().tolist())
shuffled = ops.channel_shuffle(z, 2)
print("shuffle with two groups interleaves:", shuffled.ravel().tolist())
restored = ops.channel_shuffle(shuffled, 4)
print("shuffling with c/g groups inverts it:", np.array_equal(restored, z))

print()
print("== pixel shuffle ==")
q = np.arange(4, dtype=np.float32).reshape(1, 4, 1, 1)
up = ops.pixel_shuffle(q, 2)
print("four 1x1 channels become one 2x2 plane:")
print(up[0, 0])

print()
print("== channel layer norm ==")
v = tensor.tensor4([1.0, 2.0, 3.0], (1, 3, 1, 1))
normed = ops.layer_norm_channels(v, ops.NormWeight(np.ones(3, dtype=np.float32)))
print("(1, 2, 3) normalizes to", np.round(normed.ravel(), 4).tolist())

print()
print("== resampling ==")
line = tensor.tensor4([0.0, 1.0], (1, 1, 1, 2))
print("bilinear x2 of (0, 1) with half-pixel centers:",
      ops.bilinear_resize(line, 2)[0, 0, 0].tolist())
ramp = tensor.tensor4(np.arange(8.0), (1, 1, 1, 8))
print("bicubic antialiased downscale of a ramp:",
      np.round(ops.bicubic_resize(ramp, 0.5).ravel(), 4).tolist())
same = ops.bicubic_resize(ramp, 1.0)
print(f"bicubic at scale 1.0 is the identity: max err = {np.abs(same - ramp).max():.2e}")
