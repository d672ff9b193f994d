"""Quantized export to the engine's .pnwt weight format, plus a reader
used for the post-export verification pass."""

import struct
from dataclasses import dataclass

import numpy as np
import torch

from .model import FEATURE_DIM, GainStrengthNet

MAGIC = b"PNWT"
VERSION = 1
M_FRAMES = 3
T_MAX = 800.0

KIND_DENSE = 0
KIND_CONV = 1
KIND_GRU = 2
KIND_GAIN_HEAD = 3
KIND_STRENGTH_HEAD = 4
ACT_TANH = 0
ACT_SIGMOID = 1

_HEADER = struct.Struct("<4sIIIIf")
_LAYER = struct.Struct("<BBIII")


def quantize(weight: torch.Tensor) -> np.ndarray:
    q = torch.clamp(torch.round(weight.detach() * 256.0), -127, 127)
    return q.cpu().numpy().astype(np.int8)


def _layer_records(net: GainStrengthNet):
    yield (KIND_CONV, ACT_TANH, 5, net.conv1.weight, net.conv1.bias)
    yield (KIND_CONV, ACT_TANH, 3, net.conv2.weight, net.conv2.bias)
    for gru in net.grus:
        yield (KIND_GRU, ACT_TANH, 1, gru.weight, gru.bias)
    yield (KIND_GAIN_HEAD, ACT_SIGMOID, 1, net.gain_head.weight,
           net.gain_head.bias)
    yield (KIND_STRENGTH_HEAD, ACT_SIGMOID, 1, net.strength_head.weight,
           net.strength_head.bias)


def export_quantized(net: GainStrengthNet, path) -> None:
    """Write the weight file, then reload it and verify the quantization
    error of every weight is within half a quantization step."""
    records = list(_layer_records(net))
    out = [_HEADER.pack(MAGIC, VERSION, FEATURE_DIM, len(records),
                        M_FRAMES, T_MAX)]
    for kind, act, kw, weight, bias in records:
        rows, cols = weight.shape
        out.append(_LAYER.pack(kind, act, rows, cols, kw))
        out.append(quantize(weight).tobytes(order="C"))
        out.append(bias.detach().cpu().numpy().astype("<f4").tobytes())
    data = b"".join(out)
    with open(path, "wb") as fh:
        fh.write(data)

    reloaded = load_exported(path)
    for (kind, _, _, weight, _), layer in zip(records, reloaded.layers):
        err = np.abs(weight.detach().cpu().numpy()
                     - layer.weights.astype(np.float64) / 256.0)
        if err.max() > 1.0 / 512.0 + 1e-12:
            raise RuntimeError(
                f"kind-{kind} layer quantization error {err.max():.6f} "
                "exceeds 1/512; were the weights clamped during training?")


@dataclass
class ExportedLayer:
    kind: int
    activation: int
    rows: int
    cols: int
    kernel_width: int
    weights: np.ndarray  # int8
    bias: np.ndarray     # float32


@dataclass
class ExportedModel:
    feature_dim: int
    m_frames: int
    t_max: float
    layers: list


def load_exported(path) -> ExportedModel:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, version, fdim, n_layers, m_frames, t_max = _HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise ValueError(f"{path}: not a supported weight file")
    off = _HEADER.size
    layers = []
    for _ in range(n_layers):
        kind, act, rows, cols, kw = _LAYER.unpack_from(data, off)
        off += _LAYER.size
        w = np.frombuffer(data, np.int8, rows * cols, off).reshape(rows, cols)
        off += rows * cols
        b = np.frombuffer(data, "<f4", rows, off)
        off += rows * 4
        layers.append(ExportedLayer(kind, act, rows, cols, kw,
                                    w.copy(), b.copy()))
    if off != len(data):
        raise ValueError(f"{path}: trailing bytes")
    return ExportedModel(fdim, m_frames, t_max, layers)


def quantized_inference(model: ExportedModel, feats: np.ndarray) -> np.ndarray:
    """Reference forward pass over an exported file (float32, numpy).

    Used to cross-check the runtime engine; returns (frames, 68) of
    [gains | strengths].
    """
    x = torch.from_numpy(np.asarray(feats, dtype=np.float32))[None]
    net = rebuild_network(model)
    with torch.no_grad():
        g, s = net(x)
    return torch.cat([g, s], dim=-1)[0].numpy()


def rebuild_network(model: ExportedModel) -> GainStrengthNet:
    """Instantiate a float network carrying an exported file's weights."""
    grus = [l for l in model.layers if l.kind == KIND_GRU]
    hidden = grus[0].rows // 3
    net = GainStrengthNet(hidden)
    convs = [l for l in model.layers if l.kind == KIND_CONV]
    heads = {l.kind: l for l in model.layers
             if l.kind in (KIND_GAIN_HEAD, KIND_STRENGTH_HEAD)}
    with torch.no_grad():
        for module, layer in [(net.conv1, convs[0]), (net.conv2, convs[1]),
                              *zip(net.grus, grus),
                              (net.gain_head, heads[KIND_GAIN_HEAD]),
                              (net.strength_head, heads[KIND_STRENGTH_HEAD])]:
            module.weight.copy_(
                torch.from_numpy(layer.weights.astype(np.float32) / 256.0))
            module.bias.copy_(torch.from_numpy(layer.bias.astype(np.float32)))
    return net
