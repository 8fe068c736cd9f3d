"""Lightweight channel-shuffle super-resolution in pure NumPy: forward pass,
exact gradients, desk-scale training, evaluation metrics, and closed-form
parameter/MAC accounting."""

from . import complexity, fourier, grad, metrics, ops, pngio, tensor, train, weights
from .complexity import ComplexityReport, count_macs, count_params, report
from .errors import ConfigError, ShapeError
from .fourier import ComplexPlane, fft2d, frequency_loss, ifft2d
from .metrics import EvalProtocol, psnr, rgb_to_y, ssim
from .model import (ModelConfig, ParamTree, build, channel_projection,
                    feature_mixing_block, forward, param_specs,
                    shuffle_mixer_layer, upsampler)
from .ops import (ConvWeight, NormWeight, bicubic_resize, bilinear_resize,
                  channel_concat, channel_shuffle, channel_split, conv2d,
                  depthwise_conv2d, layer_norm_channels, pixel_shuffle,
                  pixel_unshuffle, silu, vjp)
from .tensor import elementwise, flat_index, set_precision, tensor4, use_precision
from .train import (AdamState, PairedDataset, TrainConfig, adam_step,
                    grad_check, make_dataset, sample_batch, synthetic_images,
                    total_loss, train_loop)
from .weights import init_params, load, save

__version__ = "0.1.0"

__all__ = [
    "AdamState", "ComplexPlane", "ComplexityReport", "ConfigError",
    "ConvWeight", "EvalProtocol", "ModelConfig", "NormWeight",
    "PairedDataset", "ParamTree", "ShapeError", "TrainConfig", "adam_step",
    "bicubic_resize", "bilinear_resize", "build", "channel_concat",
    "channel_projection", "channel_shuffle", "channel_split", "complexity",
    "conv2d", "count_macs", "count_params", "depthwise_conv2d", "elementwise",
    "feature_mixing_block", "fft2d", "flat_index", "forward", "fourier",
    "frequency_loss", "grad", "grad_check", "ifft2d", "init_params",
    "layer_norm_channels", "load", "make_dataset", "metrics", "ops",
    "param_specs", "pixel_shuffle", "pixel_unshuffle", "pngio", "psnr",
    "report", "rgb_to_y", "sample_batch", "save", "set_precision",
    "shuffle_mixer_layer", "silu", "ssim", "synthetic_images", "tensor",
    "tensor4", "total_loss", "train", "train_loop", "upsampler",
    "use_precision", "vjp", "weights",
]
