"""Closed-form parameter and multiply-accumulate accounting.

Counts are computed from the configuration alone, never by instantiating
weights, so they double as an independent check on the builder. Conventions:

  * a convolution with out channels O, in channels per group I, kernel k
    holds O*I*k*k + O scalars (bias included) and spends O*I*k*k MACs per
    output pixel;
  * norm scales hold one scalar per channel and spend no MACs;
  * bias adds, activations, elementwise sums, shuffles, and resampling are
    free in the MAC convention used here (the convention common conv-only
    FLOP counters use);
  * trunk layers run at the low-resolution grid; upsampler stages and the
    output conv run at their actual working resolutions (the second x2
    stage at twice the input grid, the head at the output grid).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .model import ModelConfig


@dataclass(frozen=True)
class LayerCost:
    name: str
    params: int
    macs: int


@dataclass(frozen=True)
class ComplexityReport:
    layers: tuple[LayerCost, ...]
    total_params: int
    total_macs: int
    lr_resolution: tuple[int, int]
    hr_resolution: tuple[int, int]


def _conv_cost(name, out_ch, in_cpg, k, pixels) -> LayerCost:
    return LayerCost(name, out_ch * in_cpg * k * k + out_ch,
                     out_ch * in_cpg * k * k * pixels)


def _norm_cost(name, channels) -> LayerCost:
    return LayerCost(name, channels, 0)


def _proj_costs(prefix, d, pixels):
    return [
        _norm_cost(f"{prefix}.norm", d),
        _conv_cost(f"{prefix}.w0", d, d // 2, 1, pixels),
        _conv_cost(f"{prefix}.w1", d // 2, d, 1, pixels),
    ]


def _mixer_costs(prefix, d, k, pixels):
    return (_proj_costs(f"{prefix}.proj_in", d, pixels)
            + [_conv_cost(f"{prefix}.dw", d, 1, k, pixels)]
            + _proj_costs(f"{prefix}.proj_out", d, pixels))


def _fuse_costs(prefix, d, extra, fusion, pixels):
    if fusion == "none":
        return []
    if fusion in ("conv", "s_conv"):
        return [_conv_cost(f"{prefix}.conv", d, d, 3, pixels)]
    if fusion == "c_conv":
        return [_conv_cost(f"{prefix}.conv", d, 2 * d, 3, pixels)]
    if fusion == "s_resblock":
        return [_conv_cost(f"{prefix}.conv0", d, d, 3, pixels),
                _conv_cost(f"{prefix}.conv1", d, d, 3, pixels)]
    if fusion == "s_fmbconv":
        return [_conv_cost(f"{prefix}.expand", d + extra, d, 3, pixels),
                _conv_cost(f"{prefix}.reduce", d, d + extra, 1, pixels)]
    raise ConfigError(f"unknown fusion {fusion!r}")


def _layer_costs(cfg: ModelConfig, lr_h: int, lr_w: int) -> list[LayerCost]:
    d, k, s = cfg.channels, cfg.dw_kernel, cfg.scale
    px = lr_h * lr_w
    layers = [_conv_cost("stem.conv", d, 3, 3, px)]
    if cfg.variant in ("full", "cdc"):
        for i in range(cfg.n_fmb):
            layers += _mixer_costs(f"fmb.{i}.mixer.0", d, k, px)
            layers += _mixer_costs(f"fmb.{i}.mixer.1", d, k, px)
            layers += _fuse_costs(f"fmb.{i}.fuse", d, cfg.expansion_extra,
                                  cfg.fusion, px)
    elif cfg.variant == "css":
        for i in range(cfg.n_plain_layers):
            layers += _proj_costs(f"layer.{i}.proj", d, px)
            layers.append(_conv_cost(f"layer.{i}.dw", d, 1, k, px))
    else:  # convmixer_baseline: full-width pointwise MLP, D -> 2D -> D
        for i in range(cfg.n_plain_layers):
            layers.append(_conv_cost(f"layer.{i}.dw", d, 1, k, px))
            layers.append(_norm_cost(f"layer.{i}.norm", d))
            layers.append(_conv_cost(f"layer.{i}.mlp.w0", 2 * d, d, 1, px))
            layers.append(_conv_cost(f"layer.{i}.mlp.w1", d, 2 * d, 1, px))
    if s == 4:
        layers.append(_conv_cost("up.0.conv", 4 * d, d, 1, px))
        layers.append(_conv_cost("up.1.conv", 4 * d, d, 1, 4 * px))
    else:
        layers.append(_conv_cost("up.0.conv", s * s * d, d, 1, px))
    layers.append(_conv_cost("head.conv", 3, d, 3, s * s * px))
    return layers


def report(cfg: ModelConfig, lr_h: int, lr_w: int) -> ComplexityReport:
    if lr_h < 1 or lr_w < 1:
        raise ConfigError(f"resolution must be positive, got {lr_h}x{lr_w}")
    layers = tuple(_layer_costs(cfg, lr_h, lr_w))
    return ComplexityReport(
        layers=layers,
        total_params=sum(l.params for l in layers),
        total_macs=sum(l.macs for l in layers),
        lr_resolution=(lr_h, lr_w),
        hr_resolution=(cfg.scale * lr_h, cfg.scale * lr_w),
    )


def count_params(cfg: ModelConfig) -> int:
    """Exact scalar parameter count of a configuration."""
    return sum(l.params for l in _layer_costs(cfg, 1, 1))


def count_macs(cfg: ModelConfig, lr_h: int, lr_w: int) -> int:
    """Exact conv multiply-accumulate count at the given input resolution."""
    return report(cfg, lr_h, lr_w).total_macs


# ---------------------------------------------------------------- display

def params_display(params: int) -> str:
    return f"{round(params / 1000)}K"


def macs_display(macs: int) -> str:
    return f"{macs / 1e9:.1f}G"


def format_table(rep: ComplexityReport) -> str:
    """Human-readable per-layer table with exact and display totals."""
    name_w = max(len("layer"), max(len(l.name) for l in rep.layers))
    lines = [
        f"input {rep.lr_resolution[0]}x{rep.lr_resolution[1]}  ->  "
        f"output {rep.hr_resolution[0]}x{rep.hr_resolution[1]}",
        f"{'layer':<{name_w}}  {'params':>12}  {'macs':>16}",
    ]
    for l in rep.layers:
        lines.append(f"{l.name:<{name_w}}  {l.params:>12,}  {l.macs:>16,}")
    lines.append(f"{'total':<{name_w}}  {rep.total_params:>12,}  {rep.total_macs:>16,}")
    lines.append(f"display: {params_display(rep.total_params)} params, "
                 f"{macs_display(rep.total_macs)} MACs")
    return "\n".join(lines)


def format_records(rep: ComplexityReport) -> str:
    """Machine-readable form: one `name params macs` record per line."""
    lines = [f"{l.name}\t{l.params}\t{l.macs}" for l in rep.layers]
    lines.append(f"total\t{rep.total_params}\t{rep.total_macs}")
    return "\n".join(lines)
