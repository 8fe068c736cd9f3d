"""Deterministic parameter initialization and the bit-exact weights file.

File layout (all integers little-endian):

    magic   4 bytes  b"SMXW"
    version u16
    header  7 x u16: channels, dw_kernel, n_fmb, scale, expansion_extra,
                     variant code, fusion code
    then one record per tensor, in canonical tree order:
        name_len u16, name bytes (utf-8), rank u8, dims u32 each,
        payload float32 x prod(dims)

Trailing bytes are forbidden; a loader must be able to treat byte equality
as tree equality.
"""

from __future__ import annotations

import struct

import numpy as np

from . import tensor
from .model import ModelConfig, ParamTree, param_specs

MAGIC = b"SMXW"
FORMAT_VERSION = 1

_VARIANT_CODES = {"full": 0, "cdc": 1, "css": 2, "convmixer_baseline": 3}
_FUSION_CODES = {"none": 0, "conv": 1, "s_conv": 2, "c_conv": 3,
                 "s_resblock": 4, "s_fmbconv": 5}
_VARIANT_NAMES = {v: k for k, v in _VARIANT_CODES.items()}
_FUSION_NAMES = {v: k for k, v in _FUSION_CODES.items()}


class WeightsFormatError(Exception):
    """Base class for weights-file parse failures."""


class BadMagicError(WeightsFormatError):
    pass


class UnsupportedVersionError(WeightsFormatError):
    pass


class BadHeaderError(WeightsFormatError):
    pass


class TruncatedFileError(WeightsFormatError):
    pass


class TensorMismatchError(WeightsFormatError):
    """A tensor record disagrees with the config-derived expectation."""


class TrailingDataError(WeightsFormatError):
    pass


# ---------------------------------------------------------------- init

def init_params(cfg: ModelConfig, seed: int) -> ParamTree:
    """Fan-in uniform init: coeffs ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
    biases zero, norm scales one.

    Each tensor draws from its own PCG64 stream keyed by (seed, 0, canonical
    index), so adding or removing unrelated layers never shifts another
    layer's draw.
    """
    dt = tensor.dtype()
    tree: ParamTree = {}
    for index, spec in enumerate(param_specs(cfg)):
        if spec.kind == "coeffs":
            rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence([seed & 0xFFFFFFFF, 0, index])))
            bound = np.sqrt(6.0 / spec.fan_in)
            value = rng.uniform(-bound, bound, size=spec.shape)
        elif spec.kind == "bias":
            value = np.zeros(spec.shape)
        else:  # gamma
            value = np.ones(spec.shape)
        tree[spec.name] = np.ascontiguousarray(value.astype(dt))
    return tree


# ---------------------------------------------------------------- save

def _header_bytes(cfg: ModelConfig) -> bytes:
    return struct.pack(
        "<7H", cfg.channels, cfg.dw_kernel, cfg.n_fmb, cfg.scale,
        cfg.expansion_extra, _VARIANT_CODES[cfg.variant], _FUSION_CODES[cfg.fusion])


def save(tree: ParamTree, cfg: ModelConfig, path) -> None:
    """Write the tree in canonical order; refuses trees that do not match cfg."""
    specs = param_specs(cfg)
    names = [s.name for s in specs]
    if list(tree.keys()) != names:
        raise TensorMismatchError("parameter tree does not match the config layout")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<H", FORMAT_VERSION)
    blob += _header_bytes(cfg)
    for spec in specs:
        arr = tree[spec.name]
        if tuple(arr.shape) != spec.shape:
            raise TensorMismatchError(
                f"tensor {spec.name!r} has shape {arr.shape}, expected {spec.shape}")
        name_bytes = spec.name.encode("utf-8")
        blob += struct.pack("<H", len(name_bytes))
        blob += name_bytes
        blob += struct.pack("<B", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


# ---------------------------------------------------------------- load

class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.context = "file header"

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise TruncatedFileError(
                f"file truncated while reading {self.context} "
                f"(needed {count} bytes at offset {self.pos})")
        chunk = self.data[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32s(self, count: int) -> tuple[int, ...]:
        return struct.unpack(f"<{count}I", self.take(4 * count))


def load(path) -> tuple[ParamTree, ModelConfig]:
    """Read and validate a weights file; returns (tree, config).

    Every record is checked against the config-derived layout before any
    tensor is returned, so a failed load never yields a partial tree.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    rd = _Reader(data)
    magic = rd.take(4)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = rd.u16()
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported format version {version}, expected {FORMAT_VERSION}")
    fields = struct.unpack("<7H", rd.take(14))
    variant_code, fusion_code = fields[5], fields[6]
    if variant_code not in _VARIANT_NAMES:
        raise BadHeaderError(f"unknown variant code {variant_code}")
    if fusion_code not in _FUSION_NAMES:
        raise BadHeaderError(f"unknown fusion code {fusion_code}")
    try:
        cfg = ModelConfig(channels=fields[0], dw_kernel=fields[1], n_fmb=fields[2],
                          scale=fields[3], expansion_extra=fields[4],
                          variant=_VARIANT_NAMES[variant_code],
                          fusion=_FUSION_NAMES[fusion_code])
    except ValueError as exc:
        raise BadHeaderError(f"invalid header configuration: {exc}") from exc

    dt = tensor.dtype()
    tree: ParamTree = {}
    for spec in param_specs(cfg):
        rd.context = f"tensor {spec.name!r}"
        name_len = rd.u16()
        name = rd.take(name_len).decode("utf-8")
        if name != spec.name:
            raise TensorMismatchError(
                f"expected tensor {spec.name!r}, found {name!r}")
        rank = rd.u8()
        if rank != len(spec.shape):
            raise TensorMismatchError(
                f"tensor {spec.name!r} has rank {rank}, expected {len(spec.shape)}")
        dims = rd.u32s(rank)
        if dims != spec.shape:
            raise TensorMismatchError(
                f"tensor {spec.name!r} has shape {dims}, expected {spec.shape}")
        count = int(np.prod(dims, dtype=np.int64))
        payload = rd.take(4 * count)
        arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
        tree[spec.name] = np.ascontiguousarray(arr.astype(dt))
    if rd.pos != len(data):
        raise TrailingDataError(
            f"{len(data) - rd.pos} trailing bytes after the last tensor")
    return tree, cfg
