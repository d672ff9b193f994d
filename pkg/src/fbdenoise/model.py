"""Quantized recurrent inference for per-band gains and strengths.

Weights are int8 with a fixed 1/256 scale (dequantized magnitude is at
most 127/256); biases and activations stay in float32.  Inference
dequantizes and accumulates with a fixed summation order, so outputs are
bit-reproducible for a given weight file and feature stream.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, UsageError
from .features import FEATURE_DIM, LOOKAHEAD_FRAMES
from .spectral import NUM_BANDS

WEIGHT_SCALE = 1.0 / 256.0
MAGIC = b"PNWT"
VERSION = 1
#: Pitch-period normalization stored in the header (60 Hz lag at 48 kHz).
T_MAX_REFERENCE = 800.0

KIND_DENSE = 0
KIND_CONV = 1
KIND_GRU = 2
KIND_GAIN_HEAD = 3
KIND_STRENGTH_HEAD = 4
_KINDS = (KIND_DENSE, KIND_CONV, KIND_GRU, KIND_GAIN_HEAD, KIND_STRENGTH_HEAD)
_HEAD_KINDS = (KIND_GAIN_HEAD, KIND_STRENGTH_HEAD)

ACT_TANH = 0
ACT_SIGMOID = 1
ACT_RELU = 2
_ACTS = (ACT_TANH, ACT_SIGMOID, ACT_RELU)


def quantize_weight(w):
    """Map a float weight to int8: clamp(round(w*256), -127, 127)."""
    return np.clip(np.rint(np.asarray(w, dtype=np.float64) * 256.0),
                   -127, 127).astype(np.int8)


def dequantize(q):
    """Inverse of quantize_weight up to rounding: q/256."""
    return np.asarray(q, dtype=np.float32) * np.float32(WEIGHT_SCALE)


@dataclass(frozen=True)
class LayerSpec:
    kind: int
    activation: int
    rows: int
    cols: int
    kernel_width: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise FormatError(f"unknown layer kind {self.kind}")
        if self.activation not in _ACTS:
            raise FormatError(f"unknown activation {self.activation}")
        if self.rows <= 0 or self.cols <= 0:
            raise FormatError("layer dimensions must be positive")
        if self.kind == KIND_CONV and self.kernel_width not in (3, 5):
            raise FormatError("conv kernel width must be 3 or 5")
        if self.kind != KIND_CONV and self.kernel_width != 1:
            raise FormatError("kernel width is 1 for non-conv layers")

    @property
    def input_dim(self) -> int:
        if self.kind == KIND_CONV:
            return self.cols // self.kernel_width
        if self.kind == KIND_GRU:
            return self.cols - self.rows // 3
        return self.cols

    @property
    def output_dim(self) -> int:
        if self.kind == KIND_GRU:
            return self.rows // 3
        return self.rows


@dataclass
class Layer:
    spec: LayerSpec
    weights: np.ndarray  # int8, (rows, cols)
    bias: np.ndarray     # float32, (rows,)
    dequantized: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.dtype != np.int8 or w.shape != (self.spec.rows, self.spec.cols):
            raise FormatError("weight matrix dtype/shape mismatch")
        if w.min(initial=0) < -127:
            raise FormatError("quantized weight below -127")
        b = np.asarray(self.bias, dtype=np.float32)
        if b.shape != (self.spec.rows,):
            raise FormatError("bias length mismatch")
        self.bias = b
        self.dequantized = dequantize(w)


class ModelWeights:
    """Validated layer graph: trunk layers followed by the two heads."""

    def __init__(self, layers, feature_dim=FEATURE_DIM,
                 m_frames=LOOKAHEAD_FRAMES, t_max=T_MAX_REFERENCE):
        if feature_dim != FEATURE_DIM:
            raise FormatError(f"feature_dim must be {FEATURE_DIM}")
        if m_frames != LOOKAHEAD_FRAMES:
            raise FormatError(f"m_frames must be {LOOKAHEAD_FRAMES}")
        self.feature_dim = feature_dim
        self.m_frames = m_frames
        self.t_max = float(t_max)
        self.trunk = [l for l in layers if l.spec.kind not in _HEAD_KINDS]
        heads = [l for l in layers if l.spec.kind in _HEAD_KINDS]
        kinds = sorted(h.spec.kind for h in heads)
        if kinds != [KIND_GAIN_HEAD, KIND_STRENGTH_HEAD]:
            raise FormatError("model needs exactly one gain head and one strength head")
        self.gain_head = next(h for h in heads if h.spec.kind == KIND_GAIN_HEAD)
        self.strength_head = next(h for h in heads if h.spec.kind == KIND_STRENGTH_HEAD)

        dim = feature_dim
        for layer in self.trunk:
            if layer.spec.input_dim != dim:
                raise FormatError(
                    f"layer expects input {layer.spec.input_dim}, got {dim}"
                )
            dim = layer.spec.output_dim
        self.trunk_dim = dim
        for head in (self.gain_head, self.strength_head):
            if head.spec.cols != dim or head.spec.rows != NUM_BANDS:
                raise FormatError("head dimensions do not match trunk output")
            if head.spec.activation != ACT_SIGMOID:
                raise FormatError("heads must use sigmoid")

    @property
    def layers(self):
        return [*self.trunk, self.gain_head, self.strength_head]

    def total_weights(self) -> int:
        return sum(l.spec.rows * l.spec.cols for l in self.layers)


class ModelState:
    """Per-stream memory: conv input rings and GRU hidden vectors."""

    def __init__(self, weights: ModelWeights):
        self.weights = weights
        self.reset()

    def reset(self):
        self.conv_history = []
        self.gru_hidden = []
        for layer in self.weights.trunk:
            if layer.spec.kind == KIND_CONV:
                self.conv_history.append(
                    np.zeros((layer.spec.kernel_width, layer.spec.input_dim),
                             dtype=np.float32))
            elif layer.spec.kind == KIND_GRU:
                self.gru_hidden.append(
                    np.zeros(layer.spec.output_dim, dtype=np.float32))


def _matvec(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    # pairwise reduction, stable accumulation order regardless of BLAS
    return (w * x).sum(axis=1, dtype=np.float32)


def _activate(x: np.ndarray, activation: int) -> np.ndarray:
    if activation == ACT_TANH:
        return np.tanh(x)
    if activation == ACT_SIGMOID:
        return _sigmoid(x)
    return np.maximum(x, np.float32(0.0))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.float32(1.0) / (np.float32(1.0) + np.exp(-x))


def _gru_step(layer: Layer, h: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Update/reset-gate recurrence: z,r from [x;h], candidate uses r*h."""
    hidden = layer.spec.output_dim
    in_dim = layer.spec.input_dim
    w = layer.dequantized
    wx, wh = w[:, :in_dim], w[:, in_dim:]
    pre_x = _matvec(wx, x) + layer.bias
    z = _sigmoid(pre_x[:hidden] + _matvec(wh[:hidden], h))
    r = _sigmoid(pre_x[hidden:2 * hidden] + _matvec(wh[hidden:2 * hidden], h))
    cand = np.tanh(pre_x[2 * hidden:] + _matvec(wh[2 * hidden:], r * h))
    return z * h + (np.float32(1.0) - z) * cand


def infer(state: ModelState, features: np.ndarray):
    """Advance the model one frame; return (gains, strengths) in (0, 1)."""
    weights = state.weights
    x = np.asarray(features, dtype=np.float32)
    if x.shape != (weights.feature_dim,):
        raise UsageError(f"expected {weights.feature_dim} features")
    conv_i = gru_i = 0
    for layer in weights.trunk:
        kind = layer.spec.kind
        if kind == KIND_CONV:
            ring = state.conv_history[conv_i]
            ring[:-1] = ring[1:]
            ring[-1] = x
            x = _activate(_matvec(layer.dequantized, ring.reshape(-1)) + layer.bias,
                          layer.spec.activation)
            conv_i += 1
        elif kind == KIND_GRU:
            h = _gru_step(layer, state.gru_hidden[gru_i], x)
            state.gru_hidden[gru_i] = h
            x = h
            gru_i += 1
        else:
            x = _activate(_matvec(layer.dequantized, x) + layer.bias,
                          layer.spec.activation)
    gains = _sigmoid(_matvec(weights.gain_head.dequantized, x)
                     + weights.gain_head.bias)
    strengths = _sigmoid(_matvec(weights.strength_head.dequantized, x)
                         + weights.strength_head.bias)
    return gains, strengths


def complexity_report(weights: ModelWeights, frame_rate: float) -> float:
    """Millions of multiply-accumulates per second: weights * frame rate."""
    return weights.total_weights() * frame_rate / 1e6


_HEADER = struct.Struct("<4sIIIIf")
_LAYER_HEADER = struct.Struct("<BBIII")


def save_model(weights: ModelWeights) -> bytes:
    out = [_HEADER.pack(MAGIC, VERSION, weights.feature_dim, len(weights.layers),
                        weights.m_frames, weights.t_max)]
    for layer in weights.layers:
        s = layer.spec
        out.append(_LAYER_HEADER.pack(s.kind, s.activation, s.rows, s.cols,
                                      s.kernel_width))
        out.append(layer.weights.tobytes(order="C"))
        out.append(layer.bias.astype("<f4").tobytes())
    return b"".join(out)


def load_model(data: bytes) -> ModelWeights:
    if len(data) < _HEADER.size:
        raise FormatError("weight file truncated in header")
    magic, version, feature_dim, n_layers, m_frames, t_max = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported weight format version {version}")
    if t_max != T_MAX_REFERENCE:
        raise FormatError(f"unexpected pitch normalization {t_max}")
    off = _HEADER.size
    layers = []
    for i in range(n_layers):
        if off + _LAYER_HEADER.size > len(data):
            raise FormatError(f"weight file truncated in layer {i} header")
        kind, act, rows, cols, kw = _LAYER_HEADER.unpack_from(data, off)
        off += _LAYER_HEADER.size
        try:
            spec = LayerSpec(kind, act, rows, cols, kw)
        except FormatError as exc:
            raise FormatError(f"layer {i}: {exc}") from None
        n_w = rows * cols
        n_b = rows * 4
        if off + n_w + n_b > len(data):
            raise FormatError(f"weight file truncated in layer {i} data")
        w = np.frombuffer(data, dtype=np.int8, count=n_w, offset=off)
        off += n_w
        b = np.frombuffer(data, dtype="<f4", count=rows, offset=off)
        off += n_b
        if w.size and int(w.min()) < -127:
            raise FormatError(f"layer {i}: quantized weight out of [-127, 127]")
        layers.append(Layer(spec, w.reshape(rows, cols).copy(), b.copy()))
    if off != len(data):
        raise FormatError(f"{len(data) - off} trailing bytes after last layer")
    return ModelWeights(layers, feature_dim, m_frames, t_max)


def save_model_file(weights: ModelWeights, path):
    with open(path, "wb") as fh:
        fh.write(save_model(weights))


def load_model_file(path) -> ModelWeights:
    with open(path, "rb") as fh:
        return load_model(fh.read())


def desk_model(hidden: int = 48, rng: np.random.Generator | None = None,
               zero: bool = False) -> ModelWeights:
    """Default desk-scale graph: conv1x5 -> conv1x3 -> 3 GRUs -> heads.

    Random int8 weights (or zeros) sized to tens of thousands of
    parameters; real models come from the trainer's export.
    """
    rng = rng or np.random.default_rng(0)

    def draw(rows, cols):
        if zero:
            return np.zeros((rows, cols), dtype=np.int8)
        return rng.integers(-127, 128, size=(rows, cols)).astype(np.int8)

    layers = []
    specs = [
        LayerSpec(KIND_CONV, ACT_TANH, hidden, FEATURE_DIM * 5, 5),
        LayerSpec(KIND_CONV, ACT_TANH, hidden, hidden * 3, 3),
        LayerSpec(KIND_GRU, ACT_TANH, 3 * hidden, 2 * hidden),
        LayerSpec(KIND_GRU, ACT_TANH, 3 * hidden, 2 * hidden),
        LayerSpec(KIND_GRU, ACT_TANH, 3 * hidden, 2 * hidden),
        LayerSpec(KIND_GAIN_HEAD, ACT_SIGMOID, NUM_BANDS, hidden),
        LayerSpec(KIND_STRENGTH_HEAD, ACT_SIGMOID, NUM_BANDS, hidden),
    ]
    for spec in specs:
        layers.append(Layer(spec, draw(spec.rows, spec.cols),
                            np.zeros(spec.rows, dtype=np.float32)))
    return ModelWeights(layers)
