"""Primitive NHWC inference kernels: convolution, transposed convolution,
activation, normalization, and 2x resampling.

All operations are pure functions: they never modify their inputs and the
same inputs always produce bit-identical outputs. "Convolution" means
cross-correlation (no kernel flip), the usual deep-learning convention.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import BatchNormParams, ConvKernel, Tensor4

RESAMPLE_MODES = ("maxpool2", "nearest_up2", "unpool_zero2")


def _check_channels(x: Tensor4, kernel: ConvKernel) -> None:
    if x.c != kernel.cin:
        raise ValueError(
            f"input has {x.c} channels but kernel expects {kernel.cin}"
        )


def conv2d_padded(
    x: Tensor4,
    kernel: ConvKernel,
    stride: int = 1,
    pads: tuple[int, int, int, int] = (0, 0, 0, 0),
) -> Tensor4:
    """Strided cross-correlation with explicit (top, bottom, left, right) zero padding.

    This is the primitive that both padding modes of :func:`conv2d` reduce
    to; the interleaved up-convolution branches call it directly because
    their padding is asymmetric.
    """
    _check_channels(x, kernel)
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    pt, pb, pl, pr = pads
    if min(pads) < 0:
        raise ValueError(f"padding must be nonnegative, got {pads}")
    padded = np.pad(x.data, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    if padded.shape[1] < kernel.kh or padded.shape[2] < kernel.kw:
        raise ValueError(
            f"padded input {padded.shape[1]}x{padded.shape[2]} is smaller than "
            f"the {kernel.kh}x{kernel.kw} kernel (zero-size output)"
        )
    windows = sliding_window_view(padded, (kernel.kh, kernel.kw), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]
    # windows: (N, Ho, Wo, C, kh, kw); contract (C, kh, kw) against (kh, kw, cin, cout)
    out = np.tensordot(windows, kernel.weights, axes=([3, 4, 5], [2, 0, 1]))
    if kernel.bias is not None:
        out = out + kernel.bias
    return Tensor4(out)


def same_pads(size: int, k: int, stride: int) -> tuple[int, int]:
    """Per-axis "same" padding: output = ceil(size / stride), extra pad trailing."""
    out = -(-size // stride)
    total = max((out - 1) * stride + k - size, 0)
    lead = total // 2
    return lead, total - lead


def conv2d(x: Tensor4, kernel: ConvKernel, stride: int = 1, padding: str = "same") -> Tensor4:
    """2-D convolution over an NHWC tensor.

    "same" keeps output h, w = ceil(input / stride); "valid" uses no padding
    and yields floor((input - k) / stride) + 1, raising if that would be
    empty.
    """
    if padding == "same":
        pt, pb = same_pads(x.h, kernel.kh, stride)
        pl, pr = same_pads(x.w, kernel.kw, stride)
        return conv2d_padded(x, kernel, stride, (pt, pb, pl, pr))
    if padding == "valid":
        return conv2d_padded(x, kernel, stride, (0, 0, 0, 0))
    raise ValueError(f"unknown padding mode {padding!r}")


def deconv2d(x: Tensor4, kernel: ConvKernel, stride: int = 2) -> Tensor4:
    """Transposed convolution (scatter-accumulate) with output exactly input * stride.

    Each input element scatters `value * kernel` into the output at offset
    (i * stride, j * stride); of the full (in - 1) * stride + k footprint,
    (k - stride) // 2 rows/cols are cropped from the leading edge and the
    remainder from the trailing edge so the size contract holds for any
    kernel size.
    """
    _check_channels(x, kernel)
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    n, h, w, _ = x.shape
    kh, kw = kernel.kh, kernel.kw
    stuffed = np.zeros(
        (n, (h - 1) * stride + 1, (w - 1) * stride + 1, x.c), dtype=x.dtype
    )
    stuffed[:, ::stride, ::stride] = x.data
    ct = max(kh - stride, 0) // 2
    cl = max(kw - stride, 0) // 2
    flipped = ConvKernel(np.ascontiguousarray(kernel.weights[::-1, ::-1]), kernel.bias)
    return conv2d_padded(
        Tensor4(stuffed),
        flipped,
        stride=1,
        pads=(kh - 1 - ct, ct + stride - 1, kw - 1 - cl, cl + stride - 1),
    )


def relu(x: Tensor4) -> Tensor4:
    """Elementwise max(0, x)."""
    return Tensor4(np.maximum(x.data, 0))


def batchnorm_infer(x: Tensor4, params: BatchNormParams) -> Tensor4:
    """Per-channel normalization with frozen statistics."""
    if params.channels != x.c:
        raise ValueError(
            f"batchnorm has {params.channels} channels but input has {x.c}"
        )
    scale = params.gamma / np.sqrt(params.variance + params.eps)
    return Tensor4((x.data - params.mean) * scale + params.beta)


def maxpool2(x: Tensor4) -> Tensor4:
    """2x2 max pooling with stride 2; height and width must be even."""
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"maxpool2 requires even spatial dims, got {h}x{w}")
    return Tensor4(x.data.reshape(n, h // 2, 2, w // 2, 2, c).max(axis=(2, 4)))


def nearest_up2(x: Tensor4) -> Tensor4:
    """Nearest-neighbour 2x upsampling (each cell replicated into a 2x2 block)."""
    return Tensor4(np.repeat(np.repeat(x.data, 2, axis=1), 2, axis=2))


def unpool_zero2(x: Tensor4) -> Tensor4:
    """2x zero-insertion unpooling: input lands on even/even positions, zeros elsewhere."""
    n, h, w, c = x.shape
    out = np.zeros((n, 2 * h, 2 * w, c), dtype=x.dtype)
    out[:, ::2, ::2] = x.data
    return Tensor4(out)


def resample(x: Tensor4, mode: str) -> Tensor4:
    """Dispatch to one of the 2x resampling kernels by mode name."""
    if mode == "maxpool2":
        return maxpool2(x)
    if mode == "nearest_up2":
        return nearest_up2(x)
    if mode == "unpool_zero2":
        return unpool_zero2(x)
    raise ValueError(f"unknown resample mode {mode!r}; expected one of {RESAMPLE_MODES}")


def nonbt_block(x: Tensor4, k31: ConvKernel, k13: ConvKernel) -> Tensor4:
    """Factorized 3x3 convolution: relu(conv1x3(relu(conv3x1(x)))), same padding.

    Spatial size is preserved; the two kernels must be 3x1 and 1x3 with a
    consistent channel chain.
    """
    if (k31.kh, k31.kw) != (3, 1):
        raise ValueError(f"first kernel must be 3x1, got {k31.kh}x{k31.kw}")
    if (k13.kh, k13.kw) != (1, 3):
        raise ValueError(f"second kernel must be 1x3, got {k13.kh}x{k13.kw}")
    if k31.cout != k13.cin:
        raise ValueError(
            f"channel chain broken: 3x1 kernel emits {k31.cout}, 1x3 expects {k13.cin}"
        )
    y = relu(conv2d(x, k31, stride=1, padding="same"))
    return relu(conv2d(y, k13, stride=1, padding="same"))


def add(a: Tensor4, b: Tensor4) -> Tensor4:
    """Elementwise sum of two identically shaped tensors."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return Tensor4(a.data + b.data)
