"""Named weight container and its binary file format.

File layout (little-endian throughout):

    magic   4 bytes  "FCNW"
    version 1 byte   0x01
    records, repeated to EOF:
        u16   name length
        ...   UTF-8 name
        u8    kind: 0 = convolution kernel, 1 = batch normalization
        u8    rank
        u32   dims[rank]
        f32   data[prod(dims)]

Convolution records have rank 4 with dims (kh, kw, cin, cout). A kernel
bias, when present, is written as a companion rank-1 kind-0 record named
"<name>.bias" immediately after its kernel and folded back into it on
load. Batch-norm records have rank 2 with dims (5, channels): the rows are
mean, variance, gamma, beta, and the eps value replicated across the row.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensor import BatchNormParams, ConvKernel

MAGIC = b"FCNW"
VERSION = 1
_KIND_CONV = 0
_KIND_BATCHNORM = 1


class WeightFormatError(ValueError):
    """Raised when a weight file is malformed (bad magic, truncation, duplicates)."""


@dataclass
class WeightContainer:
    """Insertion-ordered map of layer name to ConvKernel or BatchNormParams."""

    entries: dict[str, ConvKernel | BatchNormParams] = field(default_factory=dict)

    def __getitem__(self, name: str):
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def names(self) -> list[str]:
        return list(self.entries)

    def missing_for(self, graph) -> list[str]:
        """Names of graph layers whose weight entry is absent."""
        from .models import required_weights

        return [name for name in required_weights(graph) if name not in self.entries]


def _pack_record(name: str, kind: int, array: np.ndarray) -> bytes:
    encoded = name.encode("utf-8")
    if len(encoded) > 0xFFFF:
        raise WeightFormatError(f"name too long: {name!r}")
    header = struct.pack("<H", len(encoded)) + encoded
    header += struct.pack("<BB", kind, array.ndim)
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    return header + np.ascontiguousarray(array, dtype="<f4").tobytes()


def save_weights(container: WeightContainer, path) -> None:
    """Serialize a container; loading the result reproduces it exactly."""
    chunks = [MAGIC, bytes([VERSION])]
    for name, entry in container.entries.items():
        if isinstance(entry, ConvKernel):
            chunks.append(_pack_record(name, _KIND_CONV, entry.weights))
            if entry.bias is not None:
                chunks.append(_pack_record(f"{name}.bias", _KIND_CONV, entry.bias))
        elif isinstance(entry, BatchNormParams):
            c = entry.channels
            block = np.empty((5, c), dtype=np.float32)
            block[0] = entry.mean
            block[1] = entry.variance
            block[2] = entry.gamma
            block[3] = entry.beta
            block[4] = np.float32(entry.eps)
            chunks.append(_pack_record(name, _KIND_BATCHNORM, block))
        else:
            raise WeightFormatError(f"entry {name!r} has unsupported type {type(entry)}")
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.blob):
            raise WeightFormatError(
                f"truncated file: wanted {count} bytes at offset {self.pos}, "
                f"only {len(self.blob) - self.pos} remain"
            )
        out = self.blob[self.pos : self.pos + count]
        self.pos += count
        return out

    def done(self) -> bool:
        return self.pos >= len(self.blob)


def load_weights(path) -> WeightContainer:
    """Parse a weight file back into a WeightContainer."""
    blob = Path(path).read_bytes()
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise WeightFormatError(f"bad magic in {path}: not a weight container")
    version = r.take(1)[0]
    if version != VERSION:
        raise WeightFormatError(f"unsupported container version {version}")

    entries: dict[str, ConvKernel | BatchNormParams] = {}
    while not r.done():
        (name_len,) = struct.unpack("<H", r.take(2))
        name = r.take(name_len).decode("utf-8")
        kind, rank = struct.unpack("<BB", r.take(2))
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        data = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(dims)
        data = data.astype(np.float32)  # native byte order, writable copy

        if kind == _KIND_CONV and rank == 1 and name.endswith(".bias"):
            base = name[: -len(".bias")]
            kernel = entries.get(base)
            if not isinstance(kernel, ConvKernel):
                raise WeightFormatError(f"bias record {name!r} has no preceding kernel")
            entries[base] = ConvKernel(kernel.weights, data)
            continue
        if name in entries:
            raise WeightFormatError(f"duplicate entry name {name!r}")
        if kind == _KIND_CONV:
            if rank != 4:
                raise WeightFormatError(f"kernel record {name!r} must be rank 4, got {rank}")
            entries[name] = ConvKernel(data)
        elif kind == _KIND_BATCHNORM:
            if rank != 2 or dims[0] != 5:
                raise WeightFormatError(
                    f"batch-norm record {name!r} must have dims (5, c), got {dims}"
                )
            entries[name] = BatchNormParams(
                mean=data[0], variance=data[1], gamma=data[2], beta=data[3],
                eps=float(data[4, 0]),
            )
        else:
            raise WeightFormatError(f"unknown record kind {kind} for {name!r}")
    return WeightContainer(entries)


def split_container(container: WeightContainer) -> WeightContainer:
    """Convert a naive up-convolution container to its fast-path equivalent.

    Every "<block>.up5x5" kernel is split into the four parity sub-kernels
    "<block>.k33" / ".k32" / ".k23" / ".k22"; all other entries pass
    through unchanged. Raises if the container holds no naive
    up-convolution kernels (already converted, or not an up-convolution
    model at all).
    """
    from .upconv import UpConvWeights, split_weights_5x5

    out: dict[str, ConvKernel | BatchNormParams] = {}
    converted = 0
    for name, entry in container.entries.items():
        if name.endswith(".up5x5") and isinstance(entry, ConvKernel):
            if (entry.kh, entry.kw) != (5, 5):
                raise WeightFormatError(
                    f"entry {name!r} is {entry.kh}x{entry.kw}, expected 5x5"
                )
            base = name[: -len(".up5x5")]
            bn = container.entries.get(f"{base}.bn")
            if not isinstance(bn, BatchNormParams):
                raise WeightFormatError(f"no batch-norm entry found for {name!r}")
            split = split_weights_5x5(UpConvWeights(entry, bn))
            for key, kernel in split.kernels.items():
                out[f"{base}.{key}"] = kernel
            converted += 1
        else:
            out[name] = entry
    if converted == 0:
        raise WeightFormatError(
            "no naive up-convolution kernels found (already converted?)"
        )
    return WeightContainer(out)
