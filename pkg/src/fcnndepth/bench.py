"""Wall-clock micro-benchmarks for blocks and whole models.

Timing reports carry mean/min/p50/p95 over at least ten measured
iterations plus an analytic multiply-accumulate count, so relative
orderings between targets can be asserted without trusting absolute times.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import upconv
from .models import LayerGraph, ModelSpec, build_model, infer, random_weights
from .tensor import Tensor4

MIN_ITERS = 10
DEFAULT_WARMUP = 2
BLOCK_KINDS = ("upconv_naive", "upconv_fast")


@dataclass(frozen=True)
class TargetReport:
    """Timing summary for one benchmark target."""

    name: str
    resolution: str
    warmup: int
    iters: int
    mean_s: float
    min_s: float
    p50_s: float
    p95_s: float
    macs: int

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "resolution": self.resolution,
            "warmup": self.warmup,
            "iters": self.iters,
            "mean_s": self.mean_s,
            "min_s": self.min_s,
            "p50_s": self.p50_s,
            "p95_s": self.p95_s,
            "macs": self.macs,
        }


def _percentile(sorted_times: list[float], q: float) -> float:
    """Nearest-rank percentile of an ascending list."""
    idx = min(len(sorted_times) - 1, max(0, math.ceil(q * len(sorted_times)) - 1))
    return sorted_times[idx]


def time_callable(fn, warmup: int, iters: int) -> dict[str, float]:
    """Run fn warmup + iters times; summarize the timed iterations."""
    if iters < MIN_ITERS:
        raise ValueError(f"need at least {MIN_ITERS} iterations, got {iters}")
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    times.sort()
    return {
        "mean_s": sum(times) / len(times),
        "min_s": times[0],
        "p50_s": _percentile(times, 0.50),
        "p95_s": _percentile(times, 0.95),
    }


def layer_macs(layer) -> int:
    """Multiply-accumulates of one layer; only conv/deconv arithmetic counts."""
    a = layer.attrs
    if layer.kind == "conv":
        _, oh, ow, cout = layer.out_shape
        return oh * ow * cout * a["kh"] * a["kw"] * a["cin"]
    if layer.kind == "deconv":
        # scatter form: every input element touches kh*kw*cout outputs
        _, oh, ow, cout = layer.out_shape
        s = a.get("stride", 2)
        return (oh // s) * (ow // s) * a["kh"] * a["kw"] * a["cin"] * cout
    return 0


def graph_macs(graph: LayerGraph) -> int:
    return sum(layer_macs(layer) for layer in graph.layers)


def bench_model(
    spec: ModelSpec, name: str, iters: int, warmup: int = DEFAULT_WARMUP, seed: int = 0
) -> TargetReport:
    """Time end-to-end inference of one model on a random image."""
    graph = build_model(spec)
    weights = random_weights(graph, seed)
    rng = np.random.default_rng(seed)
    image = Tensor4(rng.random((1, spec.input_h, spec.input_w, 3)).astype(np.float32))
    stats = time_callable(lambda: infer(graph, weights, image), warmup, iters)
    return TargetReport(
        name=name,
        resolution=f"{spec.input_w}x{spec.input_h}",
        warmup=warmup,
        iters=iters,
        macs=graph_macs(graph),
        **stats,
    )


def bench_block(
    kind: str, h: int, w: int, cin: int, cout: int,
    iters: int, warmup: int = DEFAULT_WARMUP, seed: int = 0,
) -> TargetReport:
    """Time one up-convolution block on an (1, h, w, cin) input."""
    if kind not in BLOCK_KINDS:
        raise ValueError(f"unknown block {kind!r}; expected one of {BLOCK_KINDS}")
    rng = np.random.default_rng(seed)
    x = Tensor4(rng.standard_normal((1, h, w, cin)).astype(np.float32))
    weights = upconv.random_upconv_weights(cin, cout, rng)
    if kind == "upconv_naive":
        fn = lambda: upconv.upconv_block_naive(x, weights)
        macs = upconv.naive_block_macs(h, w, cin, cout)
    else:
        split = upconv.split_weights_5x5(weights)
        fn = lambda: upconv.upconv_block_fast(x, split)
        macs = upconv.fast_block_macs(h, w, cin, cout)
    stats = time_callable(fn, warmup, iters)
    return TargetReport(
        name=kind,
        resolution=f"{w}x{h}x{cin}->{cout}",
        warmup=warmup,
        iters=iters,
        macs=macs,
        **stats,
    )
