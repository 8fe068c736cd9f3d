"""Network assembly: channel projection, mixer layers, feature mixing blocks,
sub-pixel upsampler, and the residual-over-bilinear forward pass.

Dataflow of one feature mixing block (trunk width D, depth-wise kernel k):

    x -> mixer -> mixer -> fuse(x + m)          (fusion variants below)
    mixer:      projection -> depth-wise k x k -> projection
    projection: y = shuffle(concat(W1(silu(W0(half0(norm(x))))), half1), 2) + x

with W0: D/2 -> D and W1: D -> D/2 as 1x1 convolutions. The half-width MLP is
what keeps channel mixing at O(D^2) instead of O(4 D^2); the baseline variant
uses the full-width D -> 2D -> D MLP for comparison.

Parameters live in a flat ordered tree of named arrays; names follow
stage.index.sublayer.role, e.g. "fmb.2.mixer.0.proj_in.w0.coeffs".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from . import grad as g
from . import ops
from .errors import ConfigError, ShapeError

LN_EPS = 1e-6

VARIANTS = ("full", "cdc", "css", "convmixer_baseline")
FUSIONS = ("none", "conv", "s_conv", "c_conv", "s_resblock", "s_fmbconv")

ParamTree = dict[str, np.ndarray]


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    channels: trunk width D (even). dw_kernel: depth-wise kernel side.
    n_fmb: number of feature mixing blocks (ablation trunks use 2*n_fmb
    plain layers). scale: upsampling factor. expansion_extra: extra hidden
    channels of the fused-MBConv expansion. fusion defaults to s_fmbconv for
    the full variant and none otherwise.
    """

    channels: int = 64
    dw_kernel: int = 7
    n_fmb: int = 5
    scale: int = 4
    expansion_extra: int = 16
    variant: str = "full"
    fusion: str | None = None

    def __post_init__(self):
        if self.channels < 2 or self.channels % 2 != 0:
            raise ConfigError(f"channels must be even and >= 2, got {self.channels}")
        if self.dw_kernel not in ops.SUPPORTED_DW_KERNELS:
            raise ConfigError(f"dw_kernel {self.dw_kernel} not in {ops.SUPPORTED_DW_KERNELS}")
        if self.n_fmb < 1:
            raise ConfigError(f"n_fmb must be >= 1, got {self.n_fmb}")
        if self.scale not in ops.SUPPORTED_SCALES:
            raise ConfigError(f"scale {self.scale} not in {ops.SUPPORTED_SCALES}")
        if self.expansion_extra < 1:
            raise ConfigError(f"expansion_extra must be >= 1, got {self.expansion_extra}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant {self.variant!r} not in {VARIANTS}")
        fusion = self.fusion
        if fusion is None:
            fusion = "s_fmbconv" if self.variant == "full" else "none"
        if fusion not in FUSIONS:
            raise ConfigError(f"fusion {fusion!r} not in {FUSIONS}")
        if self.variant == "full" and fusion != "s_fmbconv":
            raise ConfigError("the full variant always fuses with s_fmbconv")
        if self.variant in ("css", "convmixer_baseline") and fusion != "none":
            raise ConfigError(f"variant {self.variant!r} does not take a fusion block")
        object.__setattr__(self, "fusion", fusion)

    @property
    def n_plain_layers(self) -> int:
        """Trunk length of the ablation variants (two layers per block)."""
        return 2 * self.n_fmb


class ParamSpec(NamedTuple):
    name: str
    shape: tuple[int, ...]
    kind: str     # "coeffs" | "bias" | "gamma"
    fan_in: int   # in_ch_per_group * k*k, used by the initializer


def _conv_specs(prefix, out_ch, in_cpg, k) -> Iterator[ParamSpec]:
    yield ParamSpec(f"{prefix}.coeffs", (out_ch, in_cpg, k, k), "coeffs", in_cpg * k * k)
    yield ParamSpec(f"{prefix}.bias", (out_ch,), "bias", 0)


def _proj_specs(prefix, d) -> Iterator[ParamSpec]:
    yield ParamSpec(f"{prefix}.norm.gamma", (d,), "gamma", 0)
    yield from _conv_specs(f"{prefix}.w0", d, d // 2, 1)
    yield from _conv_specs(f"{prefix}.w1", d // 2, d, 1)


def _mixer_specs(prefix, d, k) -> Iterator[ParamSpec]:
    yield from _proj_specs(f"{prefix}.proj_in", d)
    yield from _conv_specs(f"{prefix}.dw", d, 1, k)
    yield from _proj_specs(f"{prefix}.proj_out", d)


def _fuse_specs(prefix, d, extra, fusion) -> Iterator[ParamSpec]:
    if fusion in ("conv", "s_conv"):
        yield from _conv_specs(f"{prefix}.conv", d, d, 3)
    elif fusion == "c_conv":
        yield from _conv_specs(f"{prefix}.conv", d, 2 * d, 3)
    elif fusion == "s_resblock":
        yield from _conv_specs(f"{prefix}.conv0", d, d, 3)
        yield from _conv_specs(f"{prefix}.conv1", d, d, 3)
    elif fusion == "s_fmbconv":
        yield from _conv_specs(f"{prefix}.expand", d + extra, d, 3)
        yield from _conv_specs(f"{prefix}.reduce", d, d + extra, 1)


def _upsampler_specs(d, scale) -> Iterator[ParamSpec]:
    if scale == 4:
        # two independent x2 stages
        yield from _conv_specs("up.0.conv", 4 * d, d, 1)
        yield from _conv_specs("up.1.conv", 4 * d, d, 1)
    else:
        yield from _conv_specs("up.0.conv", scale * scale * d, d, 1)


def param_specs(cfg: ModelConfig) -> list[ParamSpec]:
    """Canonical ordered parameter layout for a configuration."""
    d, k = cfg.channels, cfg.dw_kernel
    specs: list[ParamSpec] = []
    specs.extend(_conv_specs("stem.conv", d, 3, 3))
    if cfg.variant in ("full", "cdc"):
        for i in range(cfg.n_fmb):
            specs.extend(_mixer_specs(f"fmb.{i}.mixer.0", d, k))
            specs.extend(_mixer_specs(f"fmb.{i}.mixer.1", d, k))
            specs.extend(_fuse_specs(f"fmb.{i}.fuse", d, cfg.expansion_extra, cfg.fusion))
    elif cfg.variant == "css":
        for i in range(cfg.n_plain_layers):
            specs.extend(_proj_specs(f"layer.{i}.proj", d))
            specs.extend(_conv_specs(f"layer.{i}.dw", d, 1, k))
    else:  # convmixer_baseline
        for i in range(cfg.n_plain_layers):
            specs.extend(_conv_specs(f"layer.{i}.dw", d, 1, k))
            specs.append(ParamSpec(f"layer.{i}.norm.gamma", (d,), "gamma", 0))
            specs.extend(_conv_specs(f"layer.{i}.mlp.w0", 2 * d, d, 1))
            specs.extend(_conv_specs(f"layer.{i}.mlp.w1", d, 2 * d, 1))
    specs.extend(_upsampler_specs(d, cfg.scale))
    specs.extend(_conv_specs("head.conv", 3, d, 3))
    return specs


def build(cfg: ModelConfig, init_seed: int) -> ParamTree:
    """Instantiate the parameter tree in canonical order."""
    from . import weights
    return weights.init_params(cfg, init_seed)


def tree_size(tree: ParamTree) -> int:
    return sum(int(v.size) for v in tree.values())


# ---------------------------------------------------------------- blocks

def _conv_w(tree, prefix, groups=1):
    return ops.ConvWeight(tree[f"{prefix}.coeffs"], tree[f"{prefix}.bias"], groups)


def channel_projection(x, tree: ParamTree, prefix: str, tape=None):
    """Split-and-shuffle channel MLP with residual."""
    z = g.layer_norm_channels(tape, x, ops.NormWeight(tree[f"{prefix}.norm.gamma"], LN_EPS))
    z0, z1 = g.channel_split(tape, z)
    u = g.conv2d(tape, z0, _conv_w(tree, f"{prefix}.w0"))
    u = g.silu(tape, u)
    u = g.conv2d(tape, u, _conv_w(tree, f"{prefix}.w1"))
    y = g.channel_concat(tape, u, z1)
    y = g.channel_shuffle(tape, y, 2)
    return g.add(tape, y, x)


def shuffle_mixer_layer(x, tree: ParamTree, prefix: str, tape=None):
    """projection -> large depth-wise conv -> projection (no extra residual)."""
    d = x.shape[1]
    y = channel_projection(x, tree, f"{prefix}.proj_in", tape)
    y = g.depthwise_conv2d(tape, y, _conv_w(tree, f"{prefix}.dw", groups=d))
    return channel_projection(y, tree, f"{prefix}.proj_out", tape)


def _fuse(x, m, tree, prefix, fusion, tape):
    if fusion == "none":
        return m
    if fusion == "conv":
        # plain conv fusion transforms the block output only, no summation
        return g.conv2d(tape, m, _conv_w(tree, f"{prefix}.conv"))
    z = g.add(tape, x, m)
    if fusion == "s_conv":
        return g.conv2d(tape, z, _conv_w(tree, f"{prefix}.conv"))
    if fusion == "c_conv":
        zc = g.channel_concat(tape, x, m)
        return g.conv2d(tape, zc, _conv_w(tree, f"{prefix}.conv"))
    if fusion == "s_resblock":
        r = g.conv2d(tape, z, _conv_w(tree, f"{prefix}.conv0"))
        r = g.silu(tape, r)
        r = g.conv2d(tape, r, _conv_w(tree, f"{prefix}.conv1"))
        return g.add(tape, z, r)
    if fusion == "s_fmbconv":
        r = g.conv2d(tape, z, _conv_w(tree, f"{prefix}.expand"))
        r = g.silu(tape, r)
        r = g.conv2d(tape, r, _conv_w(tree, f"{prefix}.reduce"))
        return g.add(tape, z, r)
    raise ConfigError(f"unknown fusion {fusion!r}")


def feature_mixing_block(x, tree: ParamTree, prefix: str, fusion: str, tape=None):
    m = shuffle_mixer_layer(x, tree, f"{prefix}.mixer.0", tape)
    m = shuffle_mixer_layer(m, tree, f"{prefix}.mixer.1", tape)
    return _fuse(x, m, tree, f"{prefix}.fuse", fusion, tape)


def upsampler(x, tree: ParamTree, s: int, tape=None):
    """1x1 conv to s^2 x channels then pixel shuffle; x4 runs two x2 stages."""
    if s not in ops.SUPPORTED_SCALES:
        raise ConfigError(f"scale {s} not in {ops.SUPPORTED_SCALES}")
    if s == 4:
        for i in range(2):
            x = g.conv2d(tape, x, _conv_w(tree, f"up.{i}.conv"))
            x = g.pixel_shuffle(tape, x, 2)
        return x
    x = g.conv2d(tape, x, _conv_w(tree, "up.0.conv"))
    return g.pixel_shuffle(tape, x, s)


def _convmixer_block(x, tree, prefix, tape):
    d = x.shape[1]
    h = g.add(tape, x, g.depthwise_conv2d(tape, x, _conv_w(tree, f"{prefix}.dw", groups=d)))
    z = g.layer_norm_channels(tape, h, ops.NormWeight(tree[f"{prefix}.norm.gamma"], LN_EPS))
    z = g.conv2d(tape, z, _conv_w(tree, f"{prefix}.mlp.w0"))
    z = g.silu(tape, z)
    z = g.conv2d(tape, z, _conv_w(tree, f"{prefix}.mlp.w1"))
    return g.add(tape, h, z)


def _trunk(x, tree, cfg, tape):
    if cfg.variant in ("full", "cdc"):
        for i in range(cfg.n_fmb):
            x = feature_mixing_block(x, tree, f"fmb.{i}", cfg.fusion, tape)
        return x
    if cfg.variant == "css":
        for i in range(cfg.n_plain_layers):
            x = channel_projection(x, tree, f"layer.{i}.proj", tape)
            x = g.depthwise_conv2d(tape, x, _conv_w(tree, f"layer.{i}.dw",
                                                    groups=cfg.channels))
        return x
    for i in range(cfg.n_plain_layers):
        x = _convmixer_block(x, tree, f"layer.{i}", tape)
    return x


def forward(tree: ParamTree, cfg: ModelConfig, lr: np.ndarray, tape=None) -> np.ndarray:
    """Super-resolve a batch: bilinear skip plus the learned residual image.

    The bilinear path carries no parameters and is left off the tape; input
    gradients are not retained.
    """
    if lr.ndim != 4 or lr.shape[1] != 3:
        raise ShapeError(f"expected (n, 3, h, w) input, got {lr.shape}")
    x = g.conv2d(tape, lr, _conv_w(tree, "stem.conv"))
    x = _trunk(x, tree, cfg, tape)
    x = upsampler(x, tree, cfg.scale, tape)
    residual = g.conv2d(tape, x, _conv_w(tree, "head.conv"))
    skip = ops.bilinear_resize(lr, cfg.scale)
    return g.add(tape, skip, residual)
