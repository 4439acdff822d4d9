"""Independent brute-force references used as oracles by the test suite.

Everything here is deliberately written as plain scalar loops (or exact
compensated sums), sharing no code path with the vectorized kernels under
test.
"""
from __future__ import annotations

import math

import numpy as np

from fcnndepth.tensor import ConvKernel, Tensor4


def conv2d_loop_ref(
    x: Tensor4, kernel: ConvKernel, stride: int, pads: tuple[int, int, int, int]
) -> np.ndarray:
    """Six-nested-loop cross-correlation with explicit zero padding."""
    pt, pb, pl, pr = pads
    n, h, w, cin = x.shape
    kh, kw, _, cout = kernel.weights.shape
    oh = (h + pt + pb - kh) // stride + 1
    ow = (w + pl + pr - kw) // stride + 1
    out = np.zeros((n, oh, ow, cout), dtype=np.float64)
    for b in range(n):
        for i in range(oh):
            for j in range(ow):
                for co in range(cout):
                    acc = 0.0
                    for a in range(kh):
                        for bb in range(kw):
                            r = i * stride + a - pt
                            s = j * stride + bb - pl
                            if 0 <= r < h and 0 <= s < w:
                                for ci in range(cin):
                                    acc += float(x.data[b, r, s, ci]) * float(
                                        kernel.weights[a, bb, ci, co]
                                    )
                    if kernel.bias is not None:
                        acc += float(kernel.bias[co])
                    out[b, i, j, co] = acc
    return out


def same_pads_ref(size: int, k: int, stride: int) -> tuple[int, int]:
    out = -(-size // stride)
    total = max((out - 1) * stride + k - size, 0)
    return total // 2, total - total // 2


def deconv2d_scatter_ref(x: Tensor4, kernel: ConvKernel, stride: int) -> np.ndarray:
    """Scatter-accumulate transposed convolution, cropped to input * stride."""
    n, h, w, cin = x.shape
    kh, kw, _, cout = kernel.weights.shape
    full_h = (h - 1) * stride + kh
    full_w = (w - 1) * stride + kw
    full = np.zeros((n, max(full_h, h * stride + kh), max(full_w, w * stride + kw), cout))
    for b in range(n):
        for i in range(h):
            for j in range(w):
                for ci in range(cin):
                    v = float(x.data[b, i, j, ci])
                    for a in range(kh):
                        for bb in range(kw):
                            for co in range(cout):
                                full[b, i * stride + a, j * stride + bb, co] += (
                                    v * float(kernel.weights[a, bb, ci, co])
                                )
    ct = max(kh - stride, 0) // 2
    cl = max(kw - stride, 0) // 2
    out = full[:, ct : ct + h * stride, cl : cl + w * stride, :]
    if kernel.bias is not None:
        out = out + kernel.bias.astype(np.float64)
    return out


def metrics_scalar_ref(pred: np.ndarray, truth: np.ndarray) -> dict[str, float]:
    """Per-pixel metric computation with exact sums, matching compute_metrics bit for bit."""
    sq_terms, rel_terms = [], []
    hits = [0, 0, 0]
    count = 0
    for p32, t32 in zip(pred.ravel().tolist(), truth.ravel().tolist()):
        t = float(np.float64(t32))
        p = float(np.float64(p32))
        if t <= 0:
            continue
        count += 1
        e = t - p
        sq_terms.append(e * e)
        rel_terms.append(abs(e) / t)
        ratio = max(t / p, p / t) if p > 0 else math.inf
        for i in (1, 2, 3):
            if ratio < 1.25**i:
                hits[i - 1] += 1
    return {
        "mse": math.fsum(sq_terms) / count,
        "rel": math.fsum(rel_terms) / count,
        "delta1": hits[0] / count,
        "delta2": hits[1] / count,
        "delta3": hits[2] / count,
    }


def central_difference_grad(loss_fn, pred: np.ndarray, step: float = 1e-3) -> np.ndarray:
    """Central finite differences of a scalar loss with respect to each pixel."""
    grad = np.zeros_like(pred, dtype=np.float64)
    flat = grad.ravel()
    base = pred.astype(np.float64)
    for idx in range(base.size):
        bumped = base.copy().ravel()
        bumped[idx] += step
        up = loss_fn(bumped.reshape(base.shape))
        bumped[idx] -= 2 * step
        down = loss_fn(bumped.reshape(base.shape))
        flat[idx] = (up - down) / (2 * step)
    return grad


def random_depth_pair(rng: np.random.Generator, shape=(1, 3, 4, 1), invalid_frac=0.0):
    """A (prediction, truth) pair with positive depths and optional invalid pixels."""
    truth = rng.uniform(0.5, 6.0, shape)
    pred = truth + rng.normal(0.0, 0.8, shape)
    if invalid_frac > 0:
        drop = rng.random(shape) < invalid_frac
        truth = np.where(drop, 0.0, truth)
    return pred, truth
