"""Minimal reverse-mode tape.

Forward code calls the traced wrappers below with an optional Tape; each
wrapper runs the plain operator and, when a tape is present, records a
pull-back closure. `Tape.backward` walks the records in reverse and
accumulates cotangents keyed by array identity, so parameter gradients are
read back by the same array objects that live in the parameter tree.
"""

from __future__ import annotations

import numpy as np

from . import ops, tensor


class Tape:
    def __init__(self):
        self._entries = []

    def record(self, out, inputs, pull) -> None:
        """pull(g) must return one cotangent per entry of `inputs` (None to skip)."""
        self._entries.append((out, tuple(inputs), pull))

    def backward(self, root: np.ndarray, seed=None) -> dict[int, np.ndarray]:
        """Accumulate cotangents from `root`; returns {id(array): cotangent}.

        Entries keep references to every recorded array, so ids stay unique
        for the lifetime of the tape.
        """
        cot = {id(root): np.ones_like(root) if seed is None else seed}
        for out, inputs, pull in reversed(self._entries):
            g = cot.pop(id(out), None)
            if g is None:
                continue
            for inp, gi in zip(inputs, pull(g)):
                if inp is None or gi is None:
                    continue
                key = id(inp)
                cot[key] = cot[key] + gi if key in cot else gi
        return cot

    def grads_for(self, root, params: dict[str, np.ndarray], seed=None):
        """Backward pass returning {name: gradient} for a parameter tree."""
        cot = self.backward(root, seed)
        return {name: cot.get(id(arr), np.zeros_like(arr))
                for name, arr in params.items()}


# ------------------------------------------------------- traced wrappers

def add(tape, a, b):
    y = tensor.elementwise(a, b, "add")
    if tape is not None:
        tape.record(y, (a, b), lambda g: (g, g))
    return y


def conv2d(tape, x, w: ops.ConvWeight):
    y = ops.conv2d(x, w)
    if tape is not None:
        def pull(g):
            return ops.conv2d_vjp(x, w, g)
        tape.record(y, (x, w.coeffs, w.bias), pull)
    return y


def depthwise_conv2d(tape, x, w: ops.ConvWeight):
    y = ops.depthwise_conv2d(x, w)
    if tape is not None:
        def pull(g):
            return ops.conv2d_vjp(x, w, g)
        tape.record(y, (x, w.coeffs, w.bias), pull)
    return y


def layer_norm_channels(tape, x, w: ops.NormWeight):
    y = ops.layer_norm_channels(x, w)
    if tape is not None:
        def pull(g):
            return ops.layer_norm_channels_vjp(x, w, g)
        tape.record(y, (x, w.gamma), pull)
    return y


def silu(tape, x):
    y = ops.silu(x)
    if tape is not None:
        tape.record(y, (x,), lambda g: (ops.silu_vjp(x, g),))
    return y


def channel_split(tape, x):
    a, b = ops.channel_split(x)
    if tape is not None:
        half = a.shape[1]

        def pull_first(g):
            z = np.zeros_like(x)
            z[:, :half] = g
            return (z,)

        def pull_second(g):
            z = np.zeros_like(x)
            z[:, half:] = g
            return (z,)

        tape.record(a, (x,), pull_first)
        tape.record(b, (x,), pull_second)
    return a, b


def channel_concat(tape, a, b):
    y = ops.channel_concat(a, b)
    if tape is not None:
        ca = a.shape[1]
        tape.record(y, (a, b), lambda g: (g[:, :ca].copy(), g[:, ca:].copy()))
    return y


def channel_shuffle(tape, x, groups):
    y = ops.channel_shuffle(x, groups)
    if tape is not None:
        inverse = x.shape[1] // groups
        tape.record(y, (x,), lambda g: (ops.channel_shuffle(g, inverse),))
    return y


def pixel_shuffle(tape, x, r):
    y = ops.pixel_shuffle(x, r)
    if tape is not None:
        tape.record(y, (x,), lambda g: (ops.pixel_unshuffle(g, r),))
    return y
