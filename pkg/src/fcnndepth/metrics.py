"""Evaluation metrics for predicted depth maps.

Pixels with nonpositive ground truth are excluded everywhere. Scalar sums
use exact compensated summation (math.fsum), so results do not depend on
accumulation order and match a per-pixel reference bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor4

DELTA_BASE = 1.25


@dataclass(frozen=True)
class MetricsReport:
    """Mean squared error, mean absolute relative error, and threshold accuracies.

    delta_i is the fraction of valid pixels whose prediction/truth ratio
    (taken in whichever direction is >= 1) stays below 1.25^i; the three
    fields are nondecreasing by construction.
    """

    mse: float
    rel: float
    delta1: float
    delta2: float
    delta3: float

    def as_dict(self) -> dict[str, float]:
        return {
            "mse": self.mse,
            "rel": self.rel,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "delta3": self.delta3,
        }


def compute_metrics(prediction: Tensor4, truth: Tensor4) -> MetricsReport:
    """Evaluate a prediction against ground truth over the valid-pixel mask.

    Nonpositive predictions make their pixel fail every threshold (the
    ratio is treated as infinite) but still count toward mse and rel.
    """
    if prediction.shape != truth.shape:
        raise ValueError(f"shape mismatch: {prediction.shape} vs {truth.shape}")
    p = prediction.data.astype(np.float64).ravel()
    t = truth.data.astype(np.float64).ravel()
    mask = t > 0
    count = int(mask.sum())
    if count == 0:
        raise ValueError("no valid pixels: ground truth is nonpositive everywhere")
    p, t = p[mask], t[mask]
    e = t - p
    mse = math.fsum(e * e) / count
    rel = math.fsum(np.abs(e) / t) / count
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p > 0, np.maximum(t / p, p / t), np.inf)
    deltas = [
        float(np.count_nonzero(ratio < DELTA_BASE**i)) / count for i in (1, 2, 3)
    ]
    return MetricsReport(mse, rel, *deltas)
