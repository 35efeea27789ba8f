"""Float-to-integer model conversion and the on-disk model format.

Conversion happens in two stages.  Batchnorm folds into the preceding
layer's weights and bias, then every weighted layer gets one symmetric
scale s = 127 / max|w|: weights round to INT8, bias and threshold scale
by the same s so the spike decisions are preserved up to rounding.
The leak fraction snaps to the nearest power of two because the engine
leaks by arithmetic shift.
"""

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .arith import ACC_MAX, ACC_MIN, THRESH_MAX, THRESH_MIN
from .errors import ConfigError, DataFormatError, QuantizationError
from .neuron import LEAK_SHIFT_MAX, LEAK_SHIFT_MIN

KIND_CONV = "conv3x3"
KIND_FC = "fully_connected"
KIND_POOL = "maxpool2"
KINDS = (KIND_CONV, KIND_FC, KIND_POOL)

MODEL_FORMAT = "sq8-v1"


# ---------------------------------------------------------------------------
# float-side description
# ---------------------------------------------------------------------------


@dataclass
class BatchNorm:
    gamma: np.ndarray
    beta: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    eps: float = 1e-5


@dataclass
class FloatLayer:
    """One layer of the trained float network."""

    kind: str
    weights: np.ndarray | None = None  # conv: (out, in, 3, 3); fc: (out, in)
    bias: np.ndarray | None = None
    bn: BatchNorm | None = None
    v_th: float = 1.0
    leak: float | None = None  # per-step leak fraction; None is IF
    pooling: bool = False      # fused 2x2 pool on this layer's output

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.kind != KIND_POOL and self.weights is None:
            raise ConfigError(f"{self.kind} layer needs weights")
        if self.leak is not None and not 0.0 < self.leak < 1.0:
            raise ConfigError("leak fraction must sit strictly between 0 and 1")


def fuse_batchnorm(layer: FloatLayer) -> FloatLayer:
    """Fold a trailing batchnorm into weights and bias.

    w' = w * g / sqrt(var + eps)
    b' = (b - mean) * g / sqrt(var + eps) + beta
    """
    if layer.bn is None:
        return layer
    bn = layer.bn
    scale = np.asarray(bn.gamma, dtype=np.float64) / np.sqrt(
        np.asarray(bn.var, dtype=np.float64) + bn.eps
    )
    w = np.asarray(layer.weights, dtype=np.float64)
    w = w * scale.reshape((-1,) + (1,) * (w.ndim - 1))
    b = np.zeros(w.shape[0]) if layer.bias is None else \
        np.asarray(layer.bias, dtype=np.float64)
    b = (b - np.asarray(bn.mean, dtype=np.float64)) * scale + \
        np.asarray(bn.beta, dtype=np.float64)
    return replace(layer, weights=w, bias=b, bn=None)


# ---------------------------------------------------------------------------
# quantized model
# ---------------------------------------------------------------------------


@dataclass
class QuantLayer:
    kind: str
    weights: np.ndarray | None  # int8
    bias: np.ndarray | None     # int64, accumulator units
    v_th: int = 1
    leak_shift: int | None = None
    pooling: bool = False
    scale: float = 1.0  # diagnostic only; inference never uses it

    @property
    def c_out(self):
        return None if self.weights is None else self.weights.shape[0]


@dataclass
class QuantizedModel:
    layers: list = field(default_factory=list)


def leak_to_shift(frac: float) -> int:
    """Snap a leak fraction to the nearest representable 2^-k."""
    if not 0.0 < frac < 1.0:
        raise ConfigError("leak fraction must sit strictly between 0 and 1")
    k = round(-math.log2(frac))
    return min(max(k, LEAK_SHIFT_MIN), LEAK_SHIFT_MAX)


def quantize_layer(layer: FloatLayer) -> QuantLayer:
    """Quantize one layer; raises QuantizationError when a register overflows."""
    layer = fuse_batchnorm(layer)
    if layer.kind == KIND_POOL:
        return QuantLayer(KIND_POOL, None, None)

    w = np.asarray(layer.weights, dtype=np.float64)
    wmax = float(np.max(np.abs(w))) if w.size else 0.0
    scale = 127.0 / wmax if wmax > 0 else 1.0
    wq = np.clip(np.round(w * scale), -128, 127).astype(np.int8)

    v_th = round(layer.v_th * scale)
    if not THRESH_MIN <= v_th <= THRESH_MAX:
        raise QuantizationError(
            f"threshold {layer.v_th} scales to {v_th}, outside the 18-bit "
            f"register; shrink the threshold or the weight range"
        )

    bias = None
    if layer.bias is not None:
        bias = np.asarray(np.round(np.asarray(layer.bias, dtype=np.float64) * scale),
                          dtype=np.int64)
        if np.any(bias < ACC_MIN) or np.any(bias > ACC_MAX):
            raise QuantizationError("bias scales outside the 24-bit accumulator")

    shift = None if layer.leak is None else leak_to_shift(layer.leak)
    return QuantLayer(layer.kind, wq, bias, int(v_th), shift, layer.pooling, scale)


def quantize_model(layers) -> QuantizedModel:
    return QuantizedModel([quantize_layer(l) for l in layers])


# ---------------------------------------------------------------------------
# on-disk format: one JSON index plus raw INT8 weight files
# ---------------------------------------------------------------------------


def save_model(model: QuantizedModel, json_path) -> None:
    """Write the JSON index and one .w8 file per weighted layer.

    Weight files are raw int8 in C order, (out, in, 3, 3) for conv and
    (out, in) for fully connected, referenced by path relative to the
    JSON file.
    """
    json_path = os.fspath(json_path)
    stem = os.path.splitext(os.path.basename(json_path))[0]
    base = os.path.dirname(json_path) or "."
    entries = []
    for i, layer in enumerate(model.layers):
        entry = {
            "kind": layer.kind,
            "v_th": int(layer.v_th),
            "leak_shift": layer.leak_shift,
            "pooling": bool(layer.pooling),
            "weights": None,
            "shape": None,
            "bias": None,
        }
        if layer.weights is not None:
            wname = f"{stem}_l{i}.w8"
            layer.weights.astype(np.int8).tofile(os.path.join(base, wname))
            entry["weights"] = wname
            entry["shape"] = list(layer.weights.shape)
        if layer.bias is not None:
            entry["bias"] = [int(b) for b in layer.bias]
        entries.append(entry)
    with open(json_path, "w") as f:
        json.dump({"format": MODEL_FORMAT, "layers": entries}, f, indent=1)
        f.write("\n")


def _entry_error(i, msg):
    return DataFormatError(f"model layer {i}: {msg}")


def load_model(json_path) -> QuantizedModel:
    """Parse the JSON index and weight files back into a QuantizedModel."""
    json_path = os.fspath(json_path)
    base = os.path.dirname(json_path) or "."
    try:
        with open(json_path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"model index is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        raise DataFormatError("model index needs a top-level 'layers' list")

    layers = []
    for i, entry in enumerate(doc["layers"]):
        kind = entry.get("kind")
        if kind not in KINDS:
            raise _entry_error(i, f"unknown kind {kind!r}")
        v_th = entry.get("v_th", 1)
        if not isinstance(v_th, int) or not THRESH_MIN <= v_th <= THRESH_MAX:
            raise _entry_error(i, f"threshold {v_th!r} outside the 18-bit register")
        shift = entry.get("leak_shift")
        if shift is not None and (not isinstance(shift, int)
                                  or not LEAK_SHIFT_MIN <= shift <= LEAK_SHIFT_MAX):
            raise _entry_error(i, f"bad leak shift {shift!r}")

        weights = None
        if kind != KIND_POOL:
            shape = entry.get("shape")
            wname = entry.get("weights")
            want = 4 if kind == KIND_CONV else 2
            if not isinstance(wname, str) or not isinstance(shape, list) \
                    or len(shape) != want:
                raise _entry_error(i, "missing or malformed weight reference")
            if kind == KIND_CONV and shape[2:] != [3, 3]:
                raise _entry_error(i, f"conv weights must be 3x3, got {shape}")
            raw = np.fromfile(os.path.join(base, wname), dtype=np.int8)
            if raw.size != int(np.prod(shape)):
                raise _entry_error(
                    i, f"weight file holds {raw.size} values, shape needs "
                       f"{int(np.prod(shape))}"
                )
            weights = raw.reshape(shape)

        bias = entry.get("bias")
        if bias is not None:
            if not isinstance(bias, list) or weights is None \
                    or len(bias) != weights.shape[0]:
                raise _entry_error(i, "bias list does not match the output count")
            bias = np.asarray(bias, dtype=np.int64)
            if np.any(bias < ACC_MIN) or np.any(bias > ACC_MAX):
                raise _entry_error(i, "bias outside the 24-bit accumulator")

        layers.append(QuantLayer(kind, weights, bias, v_th, shift,
                                 bool(entry.get("pooling", False))))
    return QuantizedModel(layers)
