"""NHWC tensor and parameter containers shared by all inference kernels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


def _as_float_array(values, like=None) -> np.ndarray:
    """Coerce to a C-contiguous float32/float64 array (float32 by default)."""
    arr = np.asarray(values)
    if arr.dtype not in _FLOAT_DTYPES:
        arr = arr.astype(np.float32)
    if like is not None and arr.dtype != like:
        arr = arr.astype(like)
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class Tensor4:
    """Dense rank-4 array in (batch, height, width, channels) layout.

    Data is kept C-contiguous, so the linear position of element
    (n, h, w, c) is ((n * H + h) * W + w) * C + c. Kernels treat tensors
    as immutable values and always allocate fresh outputs.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.data)
        if arr.ndim != 4:
            raise ValueError(f"expected rank-4 data, got rank {arr.ndim}")
        if min(arr.shape) < 1:
            raise ValueError(f"all dimensions must be >= 1, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def h(self) -> int:
        return self.data.shape[1]

    @property
    def w(self) -> int:
        return self.data.shape[2]

    @property
    def c(self) -> int:
        return self.data.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @classmethod
    def zeros(cls, n: int, h: int, w: int, c: int, dtype=np.float32) -> "Tensor4":
        return cls(np.zeros((n, h, w, c), dtype=dtype))

    def astype(self, dtype) -> "Tensor4":
        return Tensor4(self.data.astype(dtype))


@dataclass(frozen=True)
class ConvKernel:
    """Convolution weights in (kh, kw, cin, cout) order with optional bias."""

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        w = _as_float_array(self.weights)
        if w.ndim != 4:
            raise ValueError(f"kernel weights must be rank 4, got rank {w.ndim}")
        if min(w.shape) < 1:
            raise ValueError(f"kernel dimensions must be >= 1, got {w.shape}")
        object.__setattr__(self, "weights", w)
        if self.bias is not None:
            b = _as_float_array(self.bias, like=w.dtype)
            if b.ndim != 1 or b.shape[0] != w.shape[3]:
                raise ValueError(
                    f"bias must have {w.shape[3]} entries, got shape {b.shape}"
                )
            object.__setattr__(self, "bias", b)

    @property
    def kh(self) -> int:
        return self.weights.shape[0]

    @property
    def kw(self) -> int:
        return self.weights.shape[1]

    @property
    def cin(self) -> int:
        return self.weights.shape[2]

    @property
    def cout(self) -> int:
        return self.weights.shape[3]


@dataclass(frozen=True)
class BatchNormParams:
    """Inference-time batch normalization: y = gamma * (x - mean) / sqrt(var + eps) + beta."""

    mean: np.ndarray
    variance: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        fields = {}
        dtype = None
        for name in ("mean", "variance", "gamma", "beta"):
            arr = _as_float_array(getattr(self, name))
            if arr.dtype == np.float64:
                dtype = np.float64
            fields[name] = arr
        for name, arr in fields.items():
            arr = arr if dtype is None or arr.dtype == dtype else arr.astype(dtype)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be 1-D, got rank {arr.ndim}")
            if arr.shape != fields["mean"].shape:
                raise ValueError("per-channel parameter lengths differ")
            object.__setattr__(self, name, arr)
        if np.any(self.variance < 0):
            raise ValueError("variance must be nonnegative")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def channels(self) -> int:
        return self.mean.shape[0]
