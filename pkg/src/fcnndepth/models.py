"""Declarative construction and execution of the evaluated depth networks.

A model is described by a ModelSpec (encoder kind, decoder kind, skip
wiring, input resolution, optional channel-width divisor) and compiled by
build_model into a flat LayerGraph: an ordered list of primitive layers,
each with named inputs and a precomputed output shape. Weights live in a
separate name-keyed container so the same graph can run with any parameter
set; infer executes the graph layer by layer with the kernels from ops,
interleave and upconv.

Encoders are residual bottleneck stacks (7x7/2 stem + 2x2 max pool, then
stacks of 1x1-3x3-1x1 blocks with expansion 4). The full encoder has four
stacks with block counts 3/4/6/3 and reduces 640x480 input to a
15x20x2048 bottleneck; the lite variant drops the last stack, giving
30x40x1024. Decoders run one 2x stage per encoder 2x stage (five for the
full encoder, four for lite) and emit a single-channel map at input
resolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import ops
from .interleave import interleave4
from .tensor import BatchNormParams, ConvKernel, Tensor4
from .upconv import BRANCH_PADS

ENCODERS = ("basic", "lite_basic")
DECODERS = ("deconv", "upsampling_nonbt", "upconv_naive", "upconv_fast")
SKIP_MODES = ("none", "full", "outer_middle")

STEM_WIDTH = 64
STACK_MIDS = (64, 128, 256, 512)
STACK_BLOCKS = (3, 4, 6, 3)
EXPANSION = 4

# The six evaluated architectures. The up-convolution entries default to the
# naive decoder; the "-fast" aliases select the interleaved inference path of
# the same architecture.
PRESETS = {
    "basic-deconv": ("basic", "deconv", "none"),
    "basic-sc-deconv": ("basic", "deconv", "full"),
    "basic-sc-nonbt": ("basic", "upsampling_nonbt", "full"),
    "lite-sc-nonbt": ("lite_basic", "upsampling_nonbt", "full"),
    "basic-sc-upconv": ("basic", "upconv_naive", "outer_middle"),
    "basic-sc-upconv-fast": ("basic", "upconv_fast", "outer_middle"),
    "lite-upconv": ("lite_basic", "upconv_naive", "none"),
    "lite-upconv-fast": ("lite_basic", "upconv_fast", "none"),
}
EVALUATED_PRESETS = (
    "basic-deconv",
    "basic-sc-deconv",
    "basic-sc-nonbt",
    "lite-sc-nonbt",
    "basic-sc-upconv",
    "lite-upconv",
)


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of one encoder/decoder network."""

    encoder: str
    decoder: str
    skips: str
    input_h: int = 480
    input_w: int = 640
    width_div: int = 1

    def __post_init__(self):
        if self.encoder not in ENCODERS:
            raise ValueError(f"unknown encoder {self.encoder!r}; expected one of {ENCODERS}")
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}; expected one of {DECODERS}")
        if self.skips not in SKIP_MODES:
            raise ValueError(f"unknown skip mode {self.skips!r}; expected one of {SKIP_MODES}")
        for name, size in (("input_h", self.input_h), ("input_w", self.input_w)):
            if size < 32 or size % 16:
                raise ValueError(
                    f"{name} must be >= 32 and divisible by 16, got {size}"
                )
        if self.width_div < 1 or STEM_WIDTH % self.width_div:
            raise ValueError(
                f"width_div must divide {STEM_WIDTH}, got {self.width_div}"
            )


def preset(name: str, *, input_h: int = 480, input_w: int = 640, width_div: int = 1) -> ModelSpec:
    """Build the ModelSpec for a named preset at the given resolution/width."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    encoder, decoder, skips = PRESETS[name]
    return ModelSpec(encoder, decoder, skips, input_h, input_w, width_div)


def is_evaluated_combination(spec: ModelSpec) -> bool:
    """True if the (encoder, decoder family, skips) triple is one of the six evaluated ones."""
    decoder = "upconv_naive" if spec.decoder == "upconv_fast" else spec.decoder
    return any(
        PRESETS[name] == (spec.encoder, decoder, spec.skips) for name in EVALUATED_PRESETS
    )


@dataclass(frozen=True)
class Layer:
    """One primitive step of a LayerGraph."""

    name: str
    kind: str
    inputs: tuple[str, ...]
    out_shape: tuple[int, int, int, int]
    attrs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LayerGraph:
    """Ordered, shape-annotated layer list compiled from a ModelSpec."""

    spec: ModelSpec
    layers: tuple[Layer, ...]
    output: str
    bottleneck: str


def shape_trace(graph: LayerGraph) -> list[tuple[str, tuple[int, int, int, int]]]:
    """Per-layer output shapes, computed at build time without any arithmetic."""
    return [(layer.name, layer.out_shape) for layer in graph.layers]


class _Builder:
    """Accumulates layers while tracking output shapes and name uniqueness."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.layers: list[Layer] = []
        self.shapes: dict[str, tuple[int, int, int, int]] = {
            "image": (1, spec.input_h, spec.input_w, 3)
        }

    def shape(self, name: str) -> tuple[int, int, int, int]:
        return self.shapes[name]

    def add(self, kind: str, name: str, inputs: tuple[str, ...], **attrs) -> str:
        if name in self.shapes:
            raise ValueError(f"duplicate layer name {name!r}")
        for src in inputs:
            if src not in self.shapes:
                raise ValueError(f"layer {name!r} references unknown input {src!r}")
        out_shape = self._infer_shape(kind, name, inputs, attrs)
        self.layers.append(Layer(name, kind, tuple(inputs), out_shape, attrs))
        self.shapes[name] = out_shape
        return name

    def _infer_shape(self, kind, name, inputs, attrs) -> tuple[int, int, int, int]:
        n, h, w, c = self.shapes[inputs[0]]
        if kind == "conv":
            if attrs["cin"] != c:
                raise ValueError(f"layer {name!r}: expects {attrs['cin']} channels, input has {c}")
            stride = attrs.get("stride", 1)
            padding = attrs.get("padding", "same")
            if padding == "same":
                oh, ow = -(-h // stride), -(-w // stride)
            elif padding == "valid":
                oh = (h - attrs["kh"]) // stride + 1
                ow = (w - attrs["kw"]) // stride + 1
            else:  # explicit (top, bottom, left, right)
                pt, pb, pl, pr = padding
                oh = (h + pt + pb - attrs["kh"]) // stride + 1
                ow = (w + pl + pr - attrs["kw"]) // stride + 1
            if oh < 1 or ow < 1:
                raise ValueError(f"layer {name!r}: zero-size output")
            return (n, oh, ow, attrs["cout"])
        if kind == "deconv":
            if attrs["cin"] != c:
                raise ValueError(f"layer {name!r}: expects {attrs['cin']} channels, input has {c}")
            s = attrs.get("stride", 2)
            return (n, h * s, w * s, attrs["cout"])
        if kind in ("bn", "relu", "dropout"):
            return (n, h, w, c)
        if kind == "maxpool2":
            if h % 2 or w % 2:
                raise ValueError(f"layer {name!r}: maxpool2 needs even dims, got {h}x{w}")
            return (n, h // 2, w // 2, c)
        if kind in ("nearest_up2", "unpool_zero2"):
            return (n, 2 * h, 2 * w, c)
        if kind == "add":
            other = self.shapes[inputs[1]]
            if other != (n, h, w, c):
                raise ValueError(
                    f"layer {name!r}: cannot add shapes {(n, h, w, c)} and {other}"
                )
            return (n, h, w, c)
        if kind == "interleave4":
            shapes = {self.shapes[i] for i in inputs}
            if len(shapes) != 1:
                raise ValueError(f"layer {name!r}: interleave inputs disagree: {sorted(shapes)}")
            return (n, 2 * h, 2 * w, c)
        if kind == "crop":
            th, tw = attrs["target_h"], attrs["target_w"]
            if th > h or tw > w:
                raise ValueError(f"layer {name!r}: crop target {th}x{tw} exceeds {h}x{w}")
            return (n, th, tw, c)
        raise ValueError(f"unknown layer kind {kind!r}")


def _conv(b: _Builder, name: str, src: str, kh: int, kw: int, cout: int,
          stride: int = 1, padding="same") -> str:
    cin = b.shape(src)[3]
    return b.add("conv", name, (src,), kh=kh, kw=kw, cin=cin, cout=cout,
                 stride=stride, padding=padding)


def _residual_block(b: _Builder, prefix: str, src: str, mid: int, cout: int, stride: int) -> str:
    cin = b.shape(src)[3]
    x = _conv(b, f"{prefix}.conv1", src, 1, 1, mid)
    x = b.add("bn", f"{prefix}.bn1", (x,))
    x = b.add("relu", f"{prefix}.relu1", (x,))
    x = _conv(b, f"{prefix}.conv2", x, 3, 3, mid, stride=stride)
    x = b.add("bn", f"{prefix}.bn2", (x,))
    x = b.add("relu", f"{prefix}.relu2", (x,))
    x = _conv(b, f"{prefix}.conv3", x, 1, 1, cout)
    x = b.add("bn", f"{prefix}.bn3", (x,))
    shortcut = src
    if stride != 1 or cin != cout:
        shortcut = _conv(b, f"{prefix}.proj", src, 1, 1, cout, stride=stride)
        shortcut = b.add("bn", f"{prefix}.projbn", (shortcut,))
    x = b.add("add", f"{prefix}.add", (x, shortcut))
    return b.add("relu", f"{prefix}.relu", (x,))


def _merge_skip(b: _Builder, tag: str, src: str, target: str) -> str:
    """Project an encoder feature onto a decoder output and add them.

    Projection is nearest-neighbour 2x upsampling until the spatial sizes
    match, then a 1x1 convolution when the channel counts differ.
    """
    th, tw = b.shape(target)[1:3]
    x = src
    step = 0
    while b.shape(x)[1] < th:
        x = b.add("nearest_up2", f"skip.{tag}.up{step}", (x,))
        step += 1
    if b.shape(x)[1:3] != (th, tw):
        raise ValueError(
            f"skip {tag}: cannot align {b.shape(src)[1:3]} to {(th, tw)}"
        )
    tc = b.shape(target)[3]
    if b.shape(x)[3] != tc:
        x = _conv(b, f"skip.{tag}.proj", x, 1, 1, tc)
    return b.add("add", f"skip.{tag}.add", (target, x))


def build_model(spec: ModelSpec) -> LayerGraph:
    """Compile a ModelSpec into an executable, shape-annotated LayerGraph."""
    b = _Builder(spec)
    div = spec.width_div

    x = _conv(b, "enc.stem.conv", "image", 7, 7, STEM_WIDTH // div, stride=2)
    x = b.add("bn", "enc.stem.bn", (x,))
    stem = x = b.add("relu", "enc.stem.relu", (x,))
    x = b.add("maxpool2", "enc.pool", (x,))

    n_stacks = 4 if spec.encoder == "basic" else 3
    stack_outs: list[str] = []
    for si in range(n_stacks):
        mid = STACK_MIDS[si] // div
        cout = mid * EXPANSION
        for bi in range(STACK_BLOCKS[si]):
            stride = 2 if (si > 0 and bi == 0) else 1
            x = _residual_block(b, f"enc.s{si + 1}.b{bi + 1}", x, mid, cout, stride)
        stack_outs.append(x)
    bottleneck = x

    # Decoder stage targets mirror the encoder resolution ladder back up to
    # the input; a trailing crop fixes stages where the encoder used ceil
    # rounding (input sizes divisible by 16 but not 32).
    targets = [b.shape(s)[1:3] for s in stack_outs[-2::-1]]
    targets += [b.shape(stem)[1:3], (spec.input_h, spec.input_w)]
    n_blocks = len(targets)

    # Skip edges: block index -> encoder source layer.
    skip_map: dict[int, str] = {}
    if spec.skips == "full":
        by_res = {b.shape(s)[1:3]: s for s in stack_outs[:-1]}
        for j, res in enumerate(targets, start=1):
            if res in by_res:
                skip_map[j] = by_res[res]
    elif spec.skips == "outer_middle":
        skip_map[n_blocks] = stack_outs[0]
        skip_map[math.ceil(n_blocks / 2)] = stack_outs[1]

    bott_c = b.shape(bottleneck)[3]
    if spec.decoder == "upsampling_nonbt":
        chans = [bott_c >> i for i in range(1, n_blocks + 1)]
    else:
        chans = [bott_c >> i for i in range(1, n_blocks)] + [1]
    if min(chans) < 1:
        raise ValueError(f"width_div {div} leaves the decoder with zero-width layers")

    for j, cout in enumerate(chans, start=1):
        p = f"dec.b{j}"
        if spec.decoder == "deconv":
            x = b.add("deconv", f"{p}.deconv", (x,),
                      kh=5, kw=5, cin=b.shape(x)[3], cout=cout, stride=2)
            x = b.add("bn", f"{p}.bn", (x,))
            x = b.add("relu", f"{p}.relu", (x,))
        elif spec.decoder == "upsampling_nonbt":
            x = b.add("nearest_up2", f"{p}.up", (x,))
            x = _conv(b, f"{p}.conv31", x, 3, 1, cout)
            x = b.add("relu", f"{p}.relu31", (x,))
            x = _conv(b, f"{p}.conv13", x, 1, 3, cout)
            x = b.add("relu", f"{p}.relu13", (x,))
        elif spec.decoder == "upconv_naive":
            x = b.add("unpool_zero2", f"{p}.unpool", (x,))
            x = _conv(b, f"{p}.up5x5", x, 5, 5, cout)
            x = b.add("bn", f"{p}.bn", (x,))
            x = b.add("relu", f"{p}.relu", (x,))
            x = b.add("dropout", f"{p}.drop", (x,))
        else:  # upconv_fast
            cin = b.shape(x)[3]
            sizes = {"k33": (3, 3), "k32": (3, 2), "k23": (2, 3), "k22": (2, 2)}
            branches = tuple(
                b.add("conv", f"{p}.{k}", (x,),
                      kh=sizes[k][0], kw=sizes[k][1],
                      cin=cin, cout=cout, stride=1, padding=BRANCH_PADS[k])
                for k in ("k33", "k32", "k23", "k22")
            )
            x = b.add("interleave4", f"{p}.ilv", branches)
            x = b.add("bn", f"{p}.bn", (x,))
            x = b.add("relu", f"{p}.relu", (x,))
            x = b.add("dropout", f"{p}.drop", (x,))
        th, tw = targets[j - 1]
        if b.shape(x)[1:3] != (th, tw):
            x = b.add("crop", f"{p}.crop", (x,), target_h=th, target_w=tw)
        if j in skip_map:
            x = _merge_skip(b, f"b{j}", skip_map[j], x)

    if spec.decoder == "upsampling_nonbt":
        x = _conv(b, "dec.final.conv", x, 5, 5, 1)

    return LayerGraph(spec, tuple(b.layers), output=x, bottleneck=bottleneck)


def required_weights(graph: LayerGraph) -> dict[str, str]:
    """Map layer name -> weight kind ('conv' or 'batchnorm') for layers that need one."""
    out = {}
    for layer in graph.layers:
        if layer.kind in ("conv", "deconv"):
            out[layer.name] = "conv"
        elif layer.kind == "bn":
            out[layer.name] = "batchnorm"
    return out


def random_weights(graph: LayerGraph, seed: int = 0, dtype=np.float32):
    """Generate a full weight container for a graph from one seed.

    Convolutions get He-style scaled normals and no bias; batch norms get
    near-identity statistics so activations stay well ranged through deep
    graphs.
    """
    from .weights_io import WeightContainer

    rng = np.random.default_rng(seed)
    entries: dict[str, ConvKernel | BatchNormParams] = {}
    for layer in graph.layers:
        if layer.kind in ("conv", "deconv"):
            a = layer.attrs
            std = math.sqrt(2.0 / (a["kh"] * a["kw"] * a["cin"]))
            w = rng.standard_normal((a["kh"], a["kw"], a["cin"], a["cout"])) * std
            entries[layer.name] = ConvKernel(w.astype(dtype))
        elif layer.kind == "bn":
            c = layer.out_shape[3]
            entries[layer.name] = BatchNormParams(
                mean=(rng.standard_normal(c) * 0.1).astype(dtype),
                variance=rng.uniform(0.8, 1.25, c).astype(dtype),
                gamma=rng.uniform(0.9, 1.1, c).astype(dtype),
                beta=(rng.standard_normal(c) * 0.1).astype(dtype),
                eps=float(np.float32(1e-5)),
            )
    return WeightContainer(entries)


def _run_layer(layer: Layer, inputs: list[Tensor4], weights) -> Tensor4:
    kind, a = layer.kind, layer.attrs
    if kind in ("conv", "deconv"):
        kernel = weights[layer.name]
        if not isinstance(kernel, ConvKernel):
            raise ValueError("weight entry is not a convolution kernel")
        expected = (a["kh"], a["kw"], a["cin"], a["cout"])
        if kernel.weights.shape != expected:
            raise ValueError(
                f"kernel shape {kernel.weights.shape} does not match layer "
                f"specification {expected}"
            )
        if kind == "conv":
            padding = a.get("padding", "same")
            if isinstance(padding, str):
                return ops.conv2d(inputs[0], kernel, a.get("stride", 1), padding)
            return ops.conv2d_padded(inputs[0], kernel, a.get("stride", 1), padding)
        return ops.deconv2d(inputs[0], kernel, a.get("stride", 2))
    if kind == "bn":
        params = weights[layer.name]
        if not isinstance(params, BatchNormParams):
            raise ValueError("weight entry is not batch-norm parameters")
        return ops.batchnorm_infer(inputs[0], params)
    if kind == "relu":
        return ops.relu(inputs[0])
    if kind == "dropout":
        return inputs[0]
    if kind == "maxpool2":
        return ops.maxpool2(inputs[0])
    if kind == "nearest_up2":
        return ops.nearest_up2(inputs[0])
    if kind == "unpool_zero2":
        return ops.unpool_zero2(inputs[0])
    if kind == "add":
        return ops.add(inputs[0], inputs[1])
    if kind == "interleave4":
        return interleave4(*inputs)
    if kind == "crop":
        return Tensor4(inputs[0].data[:, : a["target_h"], : a["target_w"], :].copy())
    raise ValueError(f"unknown layer kind {kind!r}")


def infer(graph: LayerGraph, weights, image: Tensor4, collect_shapes: list | None = None) -> Tensor4:
    """Run the graph on an image batch and return the (N, H, W, 1) depth map.

    Raises ValueError naming the offending layer on a missing/mismatched
    weight entry or a mid-graph shape violation. When `collect_shapes` is a
    list, the actual (name, shape) trace is appended to it.
    """
    spec = graph.spec
    if image.shape[1:] != (spec.input_h, spec.input_w, 3):
        raise ValueError(
            f"image shape {image.shape} does not match expected "
            f"(N, {spec.input_h}, {spec.input_w}, 3)"
        )
    last_use: dict[str, int] = {}
    for i, layer in enumerate(graph.layers):
        for src in layer.inputs:
            last_use[src] = i
    acts: dict[str, Tensor4] = {"image": image}
    for i, layer in enumerate(graph.layers):
        try:
            out = _run_layer(layer, [acts[s] for s in layer.inputs], weights)
        except KeyError:
            raise ValueError(f"layer {layer.name!r}: missing weight entry") from None
        except ValueError as err:
            raise ValueError(f"layer {layer.name!r}: {err}") from None
        if out.shape != (image.n,) + layer.out_shape[1:]:
            raise ValueError(
                f"layer {layer.name!r}: produced shape {out.shape}, "
                f"trace expects {(image.n,) + layer.out_shape[1:]}"
            )
        acts[layer.name] = out
        if collect_shapes is not None:
            collect_shapes.append((layer.name, out.shape))
        for src in layer.inputs:
            if last_use.get(src) == i and src != graph.output:
                del acts[src]
    return acts[graph.output]


def with_decoder(spec: ModelSpec, decoder: str) -> ModelSpec:
    """The same architecture with a different decoder runtime path."""
    return replace(spec, decoder=decoder)
