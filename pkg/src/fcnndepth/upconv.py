"""Up-convolution decoder block: naive and interleaved fast paths.

The naive block is zero-insertion unpooling followed by a 5x5 convolution,
batch normalization and ReLU (dropout is an inference-time identity). The
fast path splits the 5x5 kernel into four small kernels by tap parity,
convolves the un-upsampled input with each, and interleaves the four
results, producing the same output with a quarter of the multiply
accumulates.

Tap mapping: on the zero-stuffed grid only even/even positions are nonzero,
so for a given output-pixel parity only taps of one parity class of the 5x5
kernel (offsets relative to its center) ever touch data. Slicing the kernel
rows/cols by parity yields the four sub-kernels:

    k33 = K[0::2, 0::2]   (even row, even col offsets, 3x3)
    k32 = K[0::2, 1::2]   (even, odd, 3x2)
    k23 = K[1::2, 0::2]   (odd, even, 2x3)
    k22 = K[1::2, 1::2]   (odd, odd, 2x2)

Each branch needs its own asymmetric padding for the outputs to line up
with the naive path; the table below was derived once from that
equivalence requirement and is frozen.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .interleave import interleave4
from .tensor import BatchNormParams, ConvKernel, Tensor4

# (top, bottom, left, right) zero padding per parity branch, stride 1.
BRANCH_PADS = {
    "k33": (1, 1, 1, 1),
    "k32": (1, 1, 0, 1),
    "k23": (0, 1, 1, 1),
    "k22": (0, 1, 0, 1),
}


@dataclass(frozen=True)
class UpConvWeights:
    """Parameters of the naive block: one 5x5 kernel plus batch-norm stats."""

    full: ConvKernel
    bn: BatchNormParams

    def __post_init__(self):
        if (self.full.kh, self.full.kw) != (5, 5):
            raise ValueError(
                f"up-convolution kernel must be 5x5, got {self.full.kh}x{self.full.kw}"
            )


@dataclass(frozen=True)
class SplitUpConvWeights:
    """Parameters of the fast block: the four parity sub-kernels plus batch-norm."""

    k33: ConvKernel
    k32: ConvKernel
    k23: ConvKernel
    k22: ConvKernel
    bn: BatchNormParams

    def __post_init__(self):
        expected = {"k33": (3, 3), "k32": (3, 2), "k23": (2, 3), "k22": (2, 2)}
        chans = set()
        for name, (kh, kw) in expected.items():
            k: ConvKernel = getattr(self, name)
            if (k.kh, k.kw) != (kh, kw):
                raise ValueError(f"{name} must be {kh}x{kw}, got {k.kh}x{k.kw}")
            chans.add((k.cin, k.cout))
        if len(chans) != 1:
            raise ValueError(f"sub-kernels disagree on channels: {sorted(chans)}")

    @property
    def kernels(self) -> dict[str, ConvKernel]:
        return {"k33": self.k33, "k32": self.k32, "k23": self.k23, "k22": self.k22}


def split_weights_5x5(weights: UpConvWeights) -> SplitUpConvWeights:
    """Partition a 5x5 kernel into the four parity sub-kernels.

    The 25 taps per (cin, cout) pair are rearranged, never altered: the
    split is a bijection onto 9 + 6 + 6 + 4 taps. The shared bias, if any,
    is replicated into every sub-kernel since each output pixel is produced
    by exactly one branch.
    """
    k = weights.full.weights
    bias = weights.full.bias

    def sub(rows: slice, cols: slice) -> ConvKernel:
        return ConvKernel(np.ascontiguousarray(k[rows, cols]), bias)

    return SplitUpConvWeights(
        k33=sub(slice(0, None, 2), slice(0, None, 2)),
        k32=sub(slice(0, None, 2), slice(1, None, 2)),
        k23=sub(slice(1, None, 2), slice(0, None, 2)),
        k22=sub(slice(1, None, 2), slice(1, None, 2)),
        bn=weights.bn,
    )


def upconv_block_naive(x: Tensor4, weights: UpConvWeights) -> Tensor4:
    """relu(batchnorm(conv5x5(unpool_zero2(x)))); doubles height and width."""
    up = ops.unpool_zero2(x)
    y = ops.conv2d(up, weights.full, stride=1, padding="same")
    return ops.relu(ops.batchnorm_infer(y, weights.bn))


def upconv_block_fast(x: Tensor4, weights: SplitUpConvWeights) -> Tensor4:
    """Interleaved equivalent of the naive block on the un-upsampled input."""
    branches = [
        ops.conv2d_padded(x, kernel, stride=1, pads=BRANCH_PADS[name])
        for name, kernel in weights.kernels.items()
    ]
    y = interleave4(*branches)
    return ops.relu(ops.batchnorm_infer(y, weights.bn))


def naive_block_macs(h: int, w: int, cin: int, cout: int) -> int:
    """Multiply-accumulates of the naive path: 25 dense taps on the 2x grid."""
    return (2 * h) * (2 * w) * cout * 25 * cin


def fast_block_macs(h: int, w: int, cin: int, cout: int) -> int:
    """Multiply-accumulates of the fast path: 9 + 6 + 6 + 4 taps at input resolution."""
    return h * w * cout * (9 + 6 + 6 + 4) * cin


def random_upconv_weights(
    cin: int, cout: int, rng: np.random.Generator, dtype=np.float32
) -> UpConvWeights:
    """Draw a plausible random parameter set (used by verification and benchmarks)."""
    kernel = ConvKernel(
        (rng.standard_normal((5, 5, cin, cout)) * 0.2).astype(dtype),
        (rng.standard_normal(cout) * 0.1).astype(dtype),
    )
    bn = BatchNormParams(
        mean=(rng.standard_normal(cout) * 0.5).astype(dtype),
        variance=rng.uniform(0.25, 2.0, cout).astype(dtype),
        gamma=rng.uniform(0.5, 1.5, cout).astype(dtype),
        beta=(rng.standard_normal(cout) * 0.5).astype(dtype),
        eps=1e-5,
    )
    return UpConvWeights(kernel, bn)


def verify_equivalence(
    shape: tuple[int, int, int, int],
    seed: int,
    cout: int | None = None,
    dtype=np.float32,
    inject_fault: bool = False,
) -> float:
    """Max absolute naive-vs-fast difference for one random (weights, input) pair.

    `inject_fault` deliberately mis-wires the parity branches (a negative
    control for the verification gate); a correct build returns values well
    below 1e-5 in float32 and 1e-10 in float64.
    """
    n, h, w, cin = shape
    if cout is None:
        cout = cin
    rng = np.random.default_rng(seed)
    x = Tensor4(rng.standard_normal((n, h, w, cin)).astype(dtype))
    weights = random_upconv_weights(cin, cout, rng, dtype=dtype)
    split = split_weights_5x5(weights)

    naive = upconv_block_naive(x, weights)
    if inject_fault:
        branches = [
            ops.conv2d_padded(x, kernel, stride=1, pads=BRANCH_PADS[name])
            for name, kernel in split.kernels.items()
        ]
        # swap the even/odd and odd/even branches: wrong parity assignment
        y = interleave4(branches[0], branches[2], branches[1], branches[3])
        fast = ops.relu(ops.batchnorm_infer(y, split.bn))
    else:
        fast = upconv_block_fast(x, split)
    return float(np.max(np.abs(naive.data - fast.data)))
