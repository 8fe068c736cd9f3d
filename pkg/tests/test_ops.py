"""Forward semantics of the neural operators against independent oracles."""

import numpy as np
import pytest

from shufflesr import ops, tensor
from shufflesr.errors import ConfigError, ShapeError

from oracles import bicubic_1d_loops, conv2d_loops


def _rand(shape, seed=0):
    return tensor.asarray4(np.random.default_rng(seed).standard_normal(shape))


# ------------------------------------------------------------------ conv

def test_conv1x1_identity_kernel():
    x = _rand((1, 3, 4, 5))
    eye = np.eye(3, dtype=tensor.dtype()).reshape(3, 3, 1, 1)
    w = ops.ConvWeight(eye)
    assert np.allclose(ops.conv2d(x, w), x, atol=1e-6)


def test_conv3x3_ones_kernel_padding_arithmetic():
    v = 0.75
    x = np.full((1, 1, 5, 5), v, dtype=tensor.dtype())
    w = ops.ConvWeight(np.ones((1, 1, 3, 3), dtype=tensor.dtype()))
    y = ops.conv2d(x, w)
    assert y[0, 0, 2, 2] == pytest.approx(9 * v, rel=1e-6)   # interior
    assert y[0, 0, 0, 0] == pytest.approx(4 * v, rel=1e-6)   # corner
    assert y[0, 0, 0, 2] == pytest.approx(6 * v, rel=1e-6)   # edge


def test_conv2d_matches_loop_oracle():
    with tensor.use_precision("float64"):
        rng = np.random.default_rng(7)
        x = tensor.asarray4(rng.standard_normal((1, 2, 5, 5)))
        w = ops.ConvWeight(rng.standard_normal((3, 2, 3, 3)),
                           rng.standard_normal(3))
        got = ops.conv2d(x, w)
        ref = conv2d_loops(x, w.coeffs, w.bias, 1)
        assert np.max(np.abs(got - ref)) < 1e-12


def test_conv2d_grouped_matches_loop_oracle():
    with tensor.use_precision("float64"):
        rng = np.random.default_rng(8)
        x = tensor.asarray4(rng.standard_normal((2, 6, 4, 7)))
        w = ops.ConvWeight(rng.standard_normal((4, 3, 3, 3)),
                           rng.standard_normal(4), groups=2)
        ref = conv2d_loops(x, w.coeffs, w.bias, 2)
        assert np.max(np.abs(ops.conv2d(x, w) - ref)) < 1e-12


def test_conv2d_linearity():
    with tensor.use_precision("float64"):
        rng = np.random.default_rng(9)
        x = tensor.asarray4(rng.standard_normal((1, 3, 6, 6)))
        y = tensor.asarray4(rng.standard_normal((1, 3, 6, 6)))
        w = ops.ConvWeight(rng.standard_normal((4, 3, 3, 3)))  # no bias
        a, b = 1.7, -0.4
        lhs = ops.conv2d(a * x + b * y, w)
        rhs = a * ops.conv2d(x, w) + b * ops.conv2d(y, w)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_conv2d_shape_errors():
    x = _rand((1, 3, 4, 4))
    with pytest.raises(ShapeError):
        ops.conv2d(x, ops.ConvWeight(np.zeros((2, 4, 3, 3), dtype=np.float32)))
    with pytest.raises(ConfigError):
        ops.ConvWeight(np.zeros((2, 3, 2, 2), dtype=np.float32))  # even kernel
    with pytest.raises(ConfigError):
        ops.ConvWeight(np.zeros((3, 1, 3, 3), dtype=np.float32), groups=2)


# -------------------------------------------------------------- depthwise

def test_depthwise_delta_kernel_is_identity():
    x = _rand((2, 4, 5, 5), seed=3)
    coeffs = np.zeros((4, 1, 3, 3), dtype=tensor.dtype())
    coeffs[:, 0, 1, 1] = 1.0
    y = ops.depthwise_conv2d(x, ops.ConvWeight(coeffs, groups=4))
    assert np.allclose(y, x, atol=1e-7)


def test_depthwise_channel_independence_bitwise():
    rng = np.random.default_rng(4)
    x = tensor.asarray4(rng.standard_normal((1, 4, 6, 6)))
    w = ops.ConvWeight(tensor.asarray4(rng.standard_normal((4, 1, 3, 3))),
                       groups=4)
    base = ops.depthwise_conv2d(x, w)
    x2 = x.copy()
    x2[0, 0] += 10.0
    pert = ops.depthwise_conv2d(x2, w)
    assert np.array_equal(base[:, 1:], pert[:, 1:])
    assert not np.array_equal(base[:, 0], pert[:, 0])


def test_depthwise_k7_matches_grouped_oracle():
    with tensor.use_precision("float64"):
        rng = np.random.default_rng(5)
        x = tensor.asarray4(rng.standard_normal((1, 4, 16, 16)))
        w = ops.ConvWeight(rng.standard_normal((4, 1, 7, 7)),
                           rng.standard_normal(4), groups=4)
        ref = conv2d_loops(x, w.coeffs, w.bias, 4)
        assert np.max(np.abs(ops.depthwise_conv2d(x, w) - ref)) < 1e-12


def test_depthwise_rejects_unsupported_kernel():
    x = _rand((1, 2, 20, 20))
    with pytest.raises(ConfigError):
        ops.depthwise_conv2d(x, ops.ConvWeight(
            np.zeros((2, 1, 15, 15), dtype=np.float32), groups=2))


# ------------------------------------------------------- split / shuffle

def test_channel_split_definition():
    x = tensor.tensor4([1.0, 2.0], (1, 2, 1, 1))
    a, b = ops.channel_split(x)
    assert a[0, 0, 0, 0] == 1.0 and b[0, 0, 0, 0] == 2.0


def test_split_concat_round_trip_bit_exact():
    x = _rand((2, 8, 3, 3), seed=6)
    a, b = ops.channel_split(x)
    assert np.array_equal(ops.channel_concat(a, b), x)


def test_split_odd_channels_rejected():
    with pytest.raises(ConfigError):
        ops.channel_split(_rand((1, 3, 2, 2)))


def test_split_preserves_element_multiset():
    x = _rand((1, 64, 4, 4), seed=7)
    a, b = ops.channel_split(x)
    got = np.sort(np.concatenate([a.ravel(), b.ravel()]))
    assert np.array_equal(got, np.sort(x.ravel()))


def test_channel_shuffle_c4_g2():
    x = np.arange(4, dtype=np.float32).reshape(1, 4, 1, 1)
    y = ops.channel_shuffle(x, 2)
    assert list(y[0, :, 0, 0]) == [0, 2, 1, 3]


def test_channel_shuffle_c6_g2():
    x = np.arange(6, dtype=np.float32).reshape(1, 6, 1, 1)
    y = ops.channel_shuffle(x, 2)
    assert list(y[0, :, 0, 0]) == [0, 3, 1, 4, 2, 5]


@pytest.mark.parametrize("c", [4, 6, 8, 16, 64])
def test_channel_shuffle_inverse_pairing(c):
    x = _rand((1, c, 2, 3), seed=c)
    assert np.array_equal(ops.channel_shuffle(ops.channel_shuffle(x, 2), c // 2), x)


def test_channel_shuffle_is_permutation():
    x = _rand((2, 12, 3, 3), seed=8)
    y = ops.channel_shuffle(x, 3)
    assert np.array_equal(np.sort(x.ravel()), np.sort(y.ravel()))


def test_channel_shuffle_divisibility():
    with pytest.raises(ConfigError):
        ops.channel_shuffle(_rand((1, 6, 2, 2)), 4)


# ------------------------------------------------------------ layer norm

def test_layer_norm_constant_channels_gives_zero():
    x = np.full((1, 5, 3, 3), 2.5, dtype=np.float32)
    w = ops.NormWeight(np.full(5, 1.3, dtype=np.float32))
    assert np.allclose(ops.layer_norm_channels(x, w), 0.0, atol=1e-5)


def test_layer_norm_hand_computed_three_channels():
    # channel vector (1, 2, 3): mean 2, population variance 2/3
    x = tensor.tensor4([1.0, 2.0, 3.0], (1, 3, 1, 1))
    w = ops.NormWeight(np.ones(3, dtype=np.float32))
    y = ops.layer_norm_channels(x, w)[0, :, 0, 0]
    assert np.allclose(y, [-1.2247, 0.0, 1.2247], atol=1e-3)


def test_layer_norm_statistics():
    with tensor.use_precision("float64"):
        rng = np.random.default_rng(9)
        x = tensor.asarray4(rng.standard_normal((2, 16, 5, 5)) * 3.0 + 1.0)
        w = ops.NormWeight(np.ones(16))
        y = ops.layer_norm_channels(x, w)
        assert np.max(np.abs(y.mean(axis=1))) < 1e-5
        assert np.max(np.abs(y.var(axis=1) - 1.0)) < 1e-5


def test_layer_norm_shift_and_scale_invariance():
    with tensor.use_precision("float64"):
        rng = np.random.default_rng(10)
        x = tensor.asarray4(rng.standard_normal((1, 8, 4, 4)))
        w = ops.NormWeight(np.ones(8))
        shift = rng.standard_normal((1, 1, 4, 4))
        assert np.max(np.abs(ops.layer_norm_channels(x + shift, w)
                             - ops.layer_norm_channels(x, w))) < 1e-6
        assert np.max(np.abs(ops.layer_norm_channels(x * 3.7, w)
                             - ops.layer_norm_channels(x, w))) < 1e-4


def test_layer_norm_gamma_length_checked():
    with pytest.raises(ShapeError):
        ops.layer_norm_channels(_rand((1, 4, 2, 2)),
                                ops.NormWeight(np.ones(3, dtype=np.float32)))


# ----------------------------------------------------------------- silu

def test_silu_fixed_points():
    x = np.array([[[[0.0, 1.0]]]], dtype=np.float64)
    y = ops.silu(x)
    assert y[0, 0, 0, 0] == 0.0
    # 1 * (1 / (1 + e^-1)) evaluated independently
    assert y[0, 0, 0, 1] == pytest.approx(1.0 / (1.0 + np.exp(-1.0)), abs=1e-9)


def test_silu_asymptotics():
    x = np.array([[[[20.0, -20.0]]]], dtype=np.float64)
    y = ops.silu(x)
    assert abs(y[0, 0, 0, 0] - 20.0) < 1e-6
    assert abs(y[0, 0, 0, 1]) < 1e-6


# ---------------------------------------------------------- pixel shuffle

def test_pixel_shuffle_2x2_block_layout():
    x = tensor.tensor4([1.0, 2.0, 3.0, 4.0], (1, 4, 1, 1))
    y = ops.pixel_shuffle(x, 2)
    assert y.shape == (1, 1, 2, 2)
    assert np.array_equal(y[0, 0], [[1.0, 2.0], [3.0, 4.0]])


def test_pixel_shuffle_multiset_preserved():
    x = _rand((2, 8, 3, 5), seed=11)
    y = ops.pixel_shuffle(x, 2)
    assert y.shape == (2, 2, 6, 10)
    assert np.array_equal(np.sort(x.ravel()), np.sort(y.ravel()))


@pytest.mark.parametrize("shape,r", [((1, 4, 3, 5), 2), ((2, 18, 2, 2), 3),
                                     ((1, 32, 4, 4), 4)])
def test_pixel_shuffle_round_trip(shape, r):
    x = _rand(shape, seed=12)
    assert np.array_equal(ops.pixel_unshuffle(ops.pixel_shuffle(x, r), r), x)


def test_pixel_shuffle_divisibility():
    with pytest.raises(ConfigError):
        ops.pixel_shuffle(_rand((1, 6, 2, 2)), 2)


# -------------------------------------------------------------- resizing

def test_bilinear_constant_image():
    for s in (2, 3, 4):
        x = np.full((1, 2, 3, 3), 0.4, dtype=np.float32)
        y = ops.bilinear_resize(x, s)
        assert y.shape == (1, 2, 3 * s, 3 * s)
        assert np.allclose(y, 0.4, atol=1e-6)


def test_bilinear_half_pixel_hand_case():
    # (0, 1) upscaled x2 with half-pixel centers and clamping
    x = tensor.tensor4([0.0, 1.0], (1, 1, 1, 2))
    y = ops.bilinear_resize(x, 2)
    assert np.allclose(y[0, 0, 0], [0.0, 0.25, 0.75, 1.0], atol=1e-6)


def test_bilinear_mean_preserved():
    with tensor.use_precision("float64"):
        x = tensor.asarray4(np.random.default_rng(13).uniform(0, 1, (1, 3, 16, 16)))
        y = ops.bilinear_resize(x, 2)
        assert abs(y.mean() - x.mean()) < 1e-3


def test_bilinear_unsupported_scale():
    with pytest.raises(ConfigError):
        ops.bilinear_resize(_rand((1, 1, 4, 4)), 5)


def test_bicubic_constant_image():
    x = np.full((1, 3, 8, 8), 0.6, dtype=np.float32)
    for scale in (0.5, 2.0, 0.25):
        y = ops.bicubic_resize(x, scale)
        assert np.allclose(y, 0.6, atol=1e-5)


def test_bicubic_unit_scale_is_identity():
    with tensor.use_precision("float64"):
        x = tensor.asarray4(np.random.default_rng(14).uniform(0, 1, (1, 2, 7, 9)))
        assert np.max(np.abs(ops.bicubic_resize(x, 1.0) - x)) < 1e-6


def test_bicubic_downscale_matches_1d_oracle():
    with tensor.use_precision("float64"):
        ramp = np.arange(8, dtype=np.float64)
        x = tensor.tensor4(ramp, (1, 1, 1, 8))
        got = ops.bicubic_resize(x, 0.5)[0, 0, 0]
        ref = bicubic_1d_loops(ramp, 0.5)
        assert got.shape == (4,)
        assert np.max(np.abs(got - ref)) < 1e-9


def test_bicubic_downscale_matches_1d_oracle_column_axis():
    with tensor.use_precision("float64"):
        rng = np.random.default_rng(15)
        col = rng.uniform(0, 1, 12)
        x = tensor.tensor4(col, (1, 1, 12, 1))
        got = ops.bicubic_resize(x, 1.0 / 3.0)[0, 0, :, 0]
        ref = bicubic_1d_loops(col, 1.0 / 3.0)
        assert np.max(np.abs(got - ref)) < 1e-9


def test_bicubic_rejects_bad_scale():
    with pytest.raises(ConfigError):
        ops.bicubic_resize(_rand((1, 1, 4, 4)), 0.0)
