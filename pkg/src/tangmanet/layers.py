"""Differentiable layers: 2-D convolution, max pooling, linear, dropout.

Convolution is cross-correlation (no kernel flip) and is lowered to a
matrix product: an explicit patch-gather (im2col) with its own
backward (col2im scatter-add) feeds the already-tested matmul, so the
convolution backward is pure composition.  Max pooling is restricted to
non-overlapping windows, which is all the supported architectures use.
"""

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, ShapeError


@dataclass
class ConvSpec:
    """Configuration plus parameters of one conv layer."""

    in_channels: int
    out_channels: int
    kernel: int
    stride: int
    padding: int
    weights: Tensor  # (out, in, K, K)
    bias: Tensor  # (out,)

    def __post_init__(self):
        expect = (self.out_channels, self.in_channels, self.kernel, self.kernel)
        if tuple(self.weights.shape) != expect:
            raise ShapeError(f"conv weights must be {expect}, got {tuple(self.weights.shape)}")
        if tuple(self.bias.shape) != (self.out_channels,):
            raise ShapeError(f"conv bias must be ({self.out_channels},), got {tuple(self.bias.shape)}")
        if self.stride < 1 or self.padding < 0 or self.kernel < 1:
            raise ValueError("kernel and stride must be >= 1 and padding >= 0")


@dataclass
class DropoutSpec:
    """Drop probability and forward mode for a dropout site."""

    p: float
    mode: str = "train"

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {self.p}")
        if self.mode not in ("train", "eval"):
            raise ValueError(f"dropout mode must be 'train' or 'eval', got {self.mode!r}")


def conv_output_size(size, kernel, stride, padding):
    """(W - K + 2P)/S + 1, rejecting non-integer or non-positive results."""
    span = size - kernel + 2 * padding
    if span < 0 or span % stride != 0:
        raise ShapeError(
            f"conv output size (W - K + 2P)/S + 1 is not a positive integer "
            f"for W={size}, K={kernel}, P={padding}, S={stride}"
        )
    return span // stride + 1


def _im2col(x, kernel, stride, padding, out_h, out_w):
    """Gather conv patches into a (B*out_h*out_w, C*K*K) matrix."""
    b, c, h, w = x.shape
    xp = x.data
    if padding:
        xp = np.pad(xp, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kernel, kernel), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]  # (B, C, out_h, out_w, K, K) view
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * out_h * out_w, c * kernel * kernel)

    def backward(g):
        gw = np.ascontiguousarray(
            g.reshape(b, out_h, out_w, c, kernel, kernel).transpose(0, 3, 4, 5, 1, 2)
        )
        gx = np.zeros((b, c, h + 2 * padding, w + 2 * padding), dtype=g.dtype)
        for ki in range(kernel):
            for kj in range(kernel):
                gx[:, :, ki:ki + stride * out_h:stride,
                   kj:kj + stride * out_w:stride] += gw[:, :, ki, kj]
        if padding:
            gx = gx[:, :, padding:-padding, padding:-padding]
        return (gx,)

    return x._node(cols, (x,), backward)


def conv2d(x, spec):
    """Cross-correlate a (B, C, H, W) batch with ``spec``'s filters.

    Adds the per-output-channel bias and returns (B, out, H', W').
    """
    if x.ndim != 4:
        raise ShapeError(f"conv2d expects a (B, C, H, W) tensor, got {tuple(x.shape)}")
    b, c, h, w = x.shape
    if c != spec.in_channels:
        raise ShapeError(f"conv2d input has {c} channels but the layer expects {spec.in_channels}")
    out_h = conv_output_size(h, spec.kernel, spec.stride, spec.padding)
    out_w = conv_output_size(w, spec.kernel, spec.stride, spec.padding)

    cols = _im2col(x, spec.kernel, spec.stride, spec.padding, out_h, out_w)
    wmat = spec.weights.reshape(spec.out_channels, c * spec.kernel * spec.kernel)
    out = cols.matmul(wmat.transpose()).add_rowvec(spec.bias)
    return out.reshape(b, out_h, out_w, spec.out_channels).permute(0, 3, 1, 2)


def maxpool2d(x, kernel=2, stride=2):
    """Non-overlapping max pooling; each output grad routes to one input.

    Ties pick the lowest linear index inside the window, keeping the
    backward pass deterministic.
    """
    if kernel != stride:
        raise ValueError("maxpool2d supports only non-overlapping windows (kernel == stride)")
    if x.ndim != 4:
        raise ShapeError(f"maxpool2d expects a (B, C, H, W) tensor, got {tuple(x.shape)}")
    b, c, h, w = x.shape
    if h % kernel or w % kernel:
        raise ShapeError(
            f"maxpool2d needs spatial dims divisible by {kernel}, got {h}x{w}"
        )
    oh, ow = h // kernel, w // kernel
    windows = x.data.reshape(b, c, oh, kernel, ow, kernel)
    windows = windows.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, oh, ow, kernel * kernel)
    idx = windows.argmax(axis=-1)
    data = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]

    def backward(g):
        gw = np.zeros((b, c, oh, ow, kernel * kernel), dtype=g.dtype)
        np.put_along_axis(gw, idx[..., None], g[..., None], axis=-1)
        gw = gw.reshape(b, c, oh, ow, kernel, kernel).transpose(0, 1, 2, 4, 3, 5)
        return (gw.reshape(b, c, h, w),)

    return x._node(data, (x,), backward)


def linear(x, weights, bias):
    """Affine map of row vectors: (B, n) @ (m, n)^T + (m,)."""
    return x.matmul(weights.transpose()).add_rowvec(bias)


def dropout(x, spec, rng=None):
    """Inverted dropout: identity in eval mode, mask-and-rescale in train.

    Survivors are scaled by 1/(1-p) so inference needs no correction.
    """
    if spec.mode == "eval" or spec.p == 0.0:
        return x
    if rng is None:
        raise ValueError("train-mode dropout requires a random generator")
    keep = 1.0 - spec.p
    mask = (rng.random(x.shape) >= spec.p).astype(x.dtype.type) / np.asarray(keep, dtype=x.dtype)
    data = x.data * mask
    return x._node(data, (x,), lambda g: (g * mask,))


def flatten(x):
    """Row-major flattening of each sample: (B, ...) -> (B, prod)."""
    b = x.shape[0]
    rest = int(np.prod(x.shape[1:], dtype=np.int64)) if x.ndim > 1 else 1
    return x.reshape(b, rest)
