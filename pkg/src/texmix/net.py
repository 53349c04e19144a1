"""A small convolutional feature extractor with an exact reverse pass.

Convolutions use circular padding (``out(p) = sum W x(p + d)`` with the
offset ``d`` centred on the kernel), so a pool-free stack commutes with
circular shifts. Images and activations are ``(H, W, C)`` float64 arrays.
"""

import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (ChannelChainError, InvalidConfigError, InvalidInputError,
                     MagicMismatchError, TruncatedFileError)

CONV, RELU, AVGPOOL, MAXPOOL = "conv", "relu", "avgpool", "maxpool"
KIND_TAGS = {CONV: 0, RELU: 1, AVGPOOL: 2, MAXPOOL: 3}
TAG_KINDS = {v: k for k, v in KIND_TAGS.items()}
MAGIC = b"TXW1"

# Conv3x3(3->16) ReLU | AvgPool Conv3x3(16->32) ReLU | AvgPool Conv3x3(32->64) ReLU
DESK_ARCH = [
    {"kind": CONV, "kernel": 3, "out": 16},
    {"kind": RELU},
    {"kind": AVGPOOL},
    {"kind": CONV, "kernel": 3, "out": 32},
    {"kind": RELU},
    {"kind": AVGPOOL},
    {"kind": CONV, "kernel": 3, "out": 64},
    {"kind": RELU},
]
DESK_SEED = 0


@dataclass(frozen=True, eq=False)
class LayerSpec:
    kind: str
    weight: np.ndarray = None  # (cout, cin, kh, kw)
    bias: np.ndarray = None    # (cout,) or None
    stride: int = 1

    @property
    def in_channels(self):
        return self.weight.shape[1]

    @property
    def out_channels(self):
        return self.weight.shape[0]


@dataclass(frozen=True, eq=False)
class FeatureExtractor:
    layers: tuple
    taps: tuple
    content_tap: int = None
    pool_count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "taps", tuple(int(t) for t in self.taps))
        validate_layers(self.layers)
        n = len(self.layers)
        if not self.taps:
            raise InvalidConfigError("at least one tap is required")
        if any(b <= a for a, b in zip(self.taps, self.taps[1:])):
            raise InvalidConfigError(f"taps must be strictly increasing: {self.taps}")
        if self.taps[0] < 0 or self.taps[-1] >= n:
            raise InvalidConfigError(f"taps out of range for {n} layers: {self.taps}")
        if self.content_tap is not None and not 0 <= self.content_tap < n:
            raise InvalidConfigError(f"content_tap {self.content_tap} out of range")
        object.__setattr__(self, "pool_count",
                           sum(l.kind in (AVGPOOL, MAXPOOL) for l in self.layers))

    @property
    def in_channels(self):
        return self.layers[0].in_channels if self.layers[0].kind == CONV else None

    def size_multiple(self):
        """Spatial dims of input images must be divisible by this."""
        return 2 ** self.pool_count


def validate_layers(layers):
    channels = None
    for idx, layer in enumerate(layers):
        if layer.kind not in KIND_TAGS:
            raise InvalidConfigError(f"layer {idx}: unknown kind {layer.kind!r}")
        if layer.kind != CONV:
            continue
        w = layer.weight
        if w is None or w.ndim != 4:
            raise InvalidConfigError(f"layer {idx}: conv weight must be 4-D")
        if w.shape[2] % 2 == 0 or w.shape[3] % 2 == 0:
            raise InvalidConfigError(f"layer {idx}: kernel dims must be odd, got {w.shape[2:]}")
        if layer.stride != 1:
            raise InvalidConfigError(f"layer {idx}: only stride 1 is supported")
        if not np.all(np.isfinite(w)):
            raise InvalidConfigError(f"layer {idx}: non-finite weights")
        if layer.bias is not None and (layer.bias.shape != (w.shape[0],)
                                       or not np.all(np.isfinite(layer.bias))):
            raise InvalidConfigError(f"layer {idx}: bad bias vector")
        if channels is not None and w.shape[1] != channels:
            raise ChannelChainError(
                idx, f"expects {w.shape[1]} input channels but receives {channels}")
        channels = w.shape[0]


def conv_layer(weight, bias=None):
    weight = np.asarray(weight, dtype=np.float64)
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
    return LayerSpec(CONV, weight=weight, bias=bias)


def _circular_conv(x, w):
    """``out(p, o) = sum_{i,a,b} w[o, i, a, b] x(p + (a - kh//2, b - kw//2), i)``."""
    cout, cin, kh, kw = w.shape
    H, W, _ = x.shape
    if kh == 1 and kw == 1:
        return x @ w[:, :, 0, 0].T
    padded = np.pad(x, ((kh // 2, kh // 2), (kw // 2, kw // 2), (0, 0)), mode="wrap")
    cols = sliding_window_view(padded, (kh, kw), axis=(0, 1))  # (H, W, cin, kh, kw)
    cols = np.ascontiguousarray(cols).reshape(H * W, cin * kh * kw)
    return (cols @ w.reshape(cout, -1).T).reshape(H, W, cout)


def _conv_forward(x, layer):
    out = _circular_conv(x, layer.weight)
    if layer.bias is not None:
        out += layer.bias
    return out


def _conv_backward(g, layer):
    # adjoint of a circular correlation: correlate with the flipped, transposed kernel
    flipped = layer.weight.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1]
    return _circular_conv(g, flipped)


def _blocks(x):
    H, W, C = x.shape
    return x.reshape(H // 2, 2, W // 2, 2, C)


def _apply(layer, x, idx):
    if layer.kind == CONV:
        if x.shape[2] != layer.in_channels:
            raise InvalidInputError(
                f"layer {idx}: expects {layer.in_channels} channels, got {x.shape[2]}")
        return _conv_forward(x, layer)
    if layer.kind == RELU:
        return np.maximum(x, 0.0)
    if x.shape[0] % 2 or x.shape[1] % 2:
        raise InvalidConfigError(
            f"layer {idx}: pooling needs even spatial dims, got {x.shape[:2]}")
    blocks = _blocks(x)
    if layer.kind == AVGPOOL:
        return blocks.mean(axis=(1, 3))
    return blocks.max(axis=(1, 3))


def forward_all(net, image, start=0, stop=None):
    """Run layers ``start .. stop-1`` and return ``[input, out_start, ...]``."""
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 3:
        raise InvalidInputError(f"image must be (H, W, C), got shape {x.shape}")
    stop = len(net.layers) if stop is None else stop
    outs = [x]
    for idx in range(start, stop):
        x = _apply(net.layers[idx], x, idx)
        outs.append(x)
    return outs


def forward(net, image):
    """Activations at every tap, in tap order."""
    outs = forward_all(net, image, stop=net.taps[-1] + 1)
    return [outs[t + 1] for t in net.taps]


def propagate(net, features, from_layer, to_layer):
    """Push the output of layer ``from_layer`` through to layer ``to_layer``."""
    return forward_all(net, features, start=from_layer + 1, stop=to_layer + 1)[-1]


def backward_layers(net, activations, grads):
    """Reverse pass given cached ``forward_all`` activations.

    ``grads`` maps layer index to the cotangent of that layer's output.
    Returns the gradient with respect to the network input.
    """
    last = max(grads)
    g = None
    for idx in range(last, -1, -1):
        if idx in grads:
            cot = np.asarray(grads[idx], dtype=np.float64)
            if cot.shape != activations[idx + 1].shape:
                raise InvalidInputError(
                    f"cotangent for layer {idx} has shape {cot.shape}, "
                    f"expected {activations[idx + 1].shape}")
            g = cot if g is None else g + cot
        if g is None:
            continue
        layer, x = net.layers[idx], activations[idx]
        if layer.kind == CONV:
            g = _conv_backward(g, layer)
        elif layer.kind == RELU:
            g = g * (x > 0)
        elif layer.kind == AVGPOOL:
            g = np.repeat(np.repeat(g, 2, axis=0), 2, axis=1) * 0.25
        else:
            H2, W2, C = g.shape
            win = _blocks(x).transpose(0, 2, 4, 1, 3).reshape(H2, W2, C, 4)
            first = np.argmax(win, axis=3)  # ties: smallest index in the window
            routed = (np.arange(4) == first[..., None]) * g[..., None]
            g = routed.reshape(H2, W2, C, 2, 2).transpose(0, 3, 1, 4, 2).reshape(
                2 * H2, 2 * W2, C)
    if g is None:
        return np.zeros_like(activations[0])
    return g


def backward(net, image, tap_grads):
    """Gradient w.r.t. ``image`` of ``sum_t <tap_grads[t], forward(net, image)[t]>``."""
    if len(tap_grads) != len(net.taps):
        raise InvalidInputError(f"expected {len(net.taps)} tap cotangents, got {len(tap_grads)}")
    acts = forward_all(net, image, stop=net.taps[-1] + 1)
    return backward_layers(net, acts, dict(zip(net.taps, tap_grads)))


def default_taps(layers):
    """ReLU outputs, or the last layer when there is no ReLU."""
    taps = [i for i, l in enumerate(layers) if l.kind == RELU]
    return taps or [len(layers) - 1]


def default_content_tap(taps):
    return taps[len(taps) // 2]


def _normalize_arch(arch):
    for entry in arch:
        yield {"kind": entry} if isinstance(entry, str) else dict(entry)


def random_init(arch=None, seed=DESK_SEED, in_channels=3, taps=None, content_tap=None):
    """Build an extractor with He-normal conv weights and zero biases.

    Weights are rounded to float32 so a TXW1 round trip is lossless.
    """
    arch = DESK_ARCH if arch is None else arch
    rng = np.random.default_rng(seed)
    layers, channels = [], in_channels
    for idx, entry in enumerate(_normalize_arch(arch)):
        kind = entry.get("kind")
        if kind == CONV:
            kh = kw = entry.get("kernel", 3)
            if isinstance(kh, (list, tuple)):
                kh, kw = kh
            cout = entry.get("out")
            if not isinstance(cout, int) or cout < 1:
                raise InvalidConfigError(f"layer {idx}: conv needs a positive 'out'")
            fan_in = kh * kw * channels
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(cout, channels, kh, kw))
            w = w.astype(np.float32).astype(np.float64)
            bias = np.zeros(cout) if entry.get("bias", False) else None
            layers.append(LayerSpec(CONV, weight=w, bias=bias))
            channels = cout
        elif kind in (RELU, AVGPOOL, MAXPOOL):
            layers.append(LayerSpec(kind))
        else:
            raise InvalidConfigError(f"layer {idx}: unknown kind {kind!r}")
    taps = default_taps(layers) if taps is None else taps
    if content_tap is None:
        content_tap = default_content_tap(list(taps))
    return FeatureExtractor(layers, taps, content_tap)


def desk_backbone(seed=DESK_SEED):
    return random_init(DESK_ARCH, seed=seed)


def save_weights(net, path):
    """Write ``net`` in the TXW1 little-endian binary format."""
    chunks = [MAGIC, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        chunks.append(struct.pack("<B", KIND_TAGS[layer.kind]))
        if layer.kind != CONV:
            continue
        cout, cin, kh, kw = layer.weight.shape
        has_bias = layer.bias is not None
        chunks.append(struct.pack("<5IB", kh, kw, cin, cout, layer.stride, has_bias))
        chunks.append(layer.weight.astype("<f4").tobytes(order="C"))
        if has_bias:
            chunks.append(layer.bias.astype("<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


class _Reader:
    def __init__(self, data):
        self.data, self.pos = data, 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise TruncatedFileError(f"file ends while reading {what} at byte {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out


def load_weights(path, taps=None, content_tap=None):
    """Read a TXW1 file; taps default to every ReLU output."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise MagicMismatchError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    r = _Reader(data)
    r.take(4, "magic")
    (count,) = struct.unpack("<I", r.take(4, "layer count"))
    layers = []
    for idx in range(count):
        (tag,) = struct.unpack("<B", r.take(1, f"layer {idx} kind"))
        if tag not in TAG_KINDS:
            raise InvalidConfigError(f"layer {idx}: unknown kind tag {tag}")
        kind = TAG_KINDS[tag]
        if kind != CONV:
            layers.append(LayerSpec(kind))
            continue
        kh, kw, cin, cout, stride, has_bias = struct.unpack(
            "<5IB", r.take(21, f"layer {idx} header"))
        n = kh * kw * cin * cout
        w = np.frombuffer(r.take(4 * n, f"layer {idx} weights"), dtype="<f4")
        w = w.reshape(cout, cin, kh, kw).astype(np.float64)
        bias = None
        if has_bias:
            bias = np.frombuffer(r.take(4 * cout, f"layer {idx} bias"), dtype="<f4")
            bias = bias.astype(np.float64)
        layers.append(LayerSpec(CONV, weight=w, bias=bias, stride=stride))
    if r.pos != len(data):
        raise InvalidConfigError(f"{path}: {len(data) - r.pos} trailing bytes")
    validate_layers(layers)
    taps = default_taps(layers) if taps is None else taps
    if content_tap is None:
        content_tap = default_content_tap(list(taps))
    return FeatureExtractor(layers, taps, content_tap)
