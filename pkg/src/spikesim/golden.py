"""Independent integer reference model.

Deliberately structured nothing like the pipeline: dense tensor ops
per timestep, no tiling, no packed words, no buffers, and its own wrap
and leak formulations.  Agreement between this module and the
cycle-level simulator is the core correctness argument, so nothing
here may import from the datapath modules.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .quantize import KIND_CONV, KIND_FC, KIND_POOL, QuantizedModel
from .spikeio import SpikeTensor

_WRAP = 1 << 24
_HALF = 1 << 23


def _wrap24(v):
    # formulated with modulo on purpose; the engine uses mask-and-offset
    return (v + _HALF) % _WRAP - _HALF


def _decay(v, shift):
    # floor division equals the engine's arithmetic shift for negatives too
    if shift is None:
        return v
    return v - v // (1 << shift)


# ---------------------------------------------------------------------------
# single layers
# ---------------------------------------------------------------------------


def _membrane_steps(currents, v_th, leak_shift, compare_ge, fire):
    """Shared timestep loop: currents (T, ...) -> (spikes, last potentials)."""
    v = np.zeros(currents.shape[1:], dtype=np.int64)
    out = np.zeros(currents.shape, dtype=np.uint8)
    last = None
    for t in range(currents.shape[0]):
        v = _wrap24(v + currents[t])
        v = _decay(v, leak_shift)
        last = v.copy()
        if fire:
            spikes = v >= v_th if compare_ge else v > v_th
            out[t] = spikes
            v = np.where(spikes, 0, v)
        if t == currents.shape[0] - 1:
            v = np.zeros_like(v)
    return out, last


def golden_conv3x3(x, weights, bias=None, v_th=1, leak_shift=None,
                   compare_ge=True, fire=True):
    """Reference 3x3/stride-1/same-padding spiking conv.

    x: (T, C_in, H, W) 0/1; weights: (C_out, C_in, 3, 3) int.
    Returns (spikes (T, C_out, H, W), last potentials (C_out, H, W)).
    """
    x = np.asarray(x, dtype=np.int64)
    w = np.asarray(weights, dtype=np.int64)
    t_steps, c_in, h, wd = x.shape
    if w.ndim != 4 or w.shape[1] != c_in or w.shape[2:] != (3, 3):
        raise ConfigError(f"conv weights {w.shape} do not match {c_in} input channels")
    c_out = w.shape[0]
    currents = np.zeros((t_steps, c_out, h, wd), dtype=np.int64)
    padded = np.zeros((t_steps, c_in, h + 2, wd + 2), dtype=np.int64)
    padded[:, :, 1:-1, 1:-1] = x
    for kh in range(3):
        for kw in range(3):
            currents += np.einsum(
                "oc,tcyx->toyx", w[:, :, kh, kw], padded[:, :, kh:kh + h, kw:kw + wd]
            )
    if bias is not None:
        currents += np.asarray(bias, dtype=np.int64).reshape(1, -1, 1, 1)
    return _membrane_steps(currents, v_th, leak_shift, compare_ge, fire)


def golden_fc(x, weights, bias=None, v_th=1, leak_shift=None,
              compare_ge=True, fire=True):
    """Reference fully connected spiking layer.

    The feature order is pixel-major, channel fastest:
    f = ((y*W) + x)*C + c, matching the file format's linear order.
    Returns (spikes (T, C_out, 1, 1), last potentials (C_out, 1, 1)).
    """
    x = np.asarray(x, dtype=np.int64)
    w = np.asarray(weights, dtype=np.int64)
    t_steps = x.shape[0]
    feats = x.transpose(0, 2, 3, 1).reshape(t_steps, -1)
    if w.ndim != 2 or w.shape[1] != feats.shape[1]:
        raise ConfigError(
            f"fc weights {w.shape} do not match {feats.shape[1]} input features"
        )
    currents = feats @ w.T
    if bias is not None:
        currents = currents + np.asarray(bias, dtype=np.int64).reshape(1, -1)
    currents = currents.reshape(t_steps, w.shape[0], 1, 1)
    return _membrane_steps(currents, v_th, leak_shift, compare_ge, fire)


def golden_maxpool2(x):
    """Reference 2x2 stride-2 OR pooling per timestep."""
    x = np.asarray(x, dtype=np.uint8)
    t, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ConfigError(f"pooling needs even spatial dims, got {h}x{w}")
    return x.reshape(t, c, h // 2, 2, w // 2, 2).any(axis=(3, 5)).astype(np.uint8)


def scalar_reference(currents, v_th, leak_shift=None, compare_ge=True):
    """Plain-Python single-neuron trace, the third implementation.

    Takes the per-timestep input currents; returns (spikes, potentials)
    where potentials[t] is the post-leak value the comparison saw.
    """
    v = 0
    spikes, seen = [], []
    for i in currents:
        v = (v + int(i) + _HALF) % _WRAP - _HALF
        if leak_shift is not None:
            v -= v // (1 << leak_shift)
        seen.append(v)
        fired = v >= v_th if compare_ge else v > v_th
        spikes.append(int(fired))
        if fired:
            v = 0
    return spikes, seen


# ---------------------------------------------------------------------------
# whole networks
# ---------------------------------------------------------------------------


def count_sops(kind, c_in, c_out, h, w, t_steps) -> int:
    """Synaptic operations of one weighted layer, dense and unpadded.

    One accumulate counts as two operations.  Conv counts the padding
    taps (the window former really feeds them); fc counts every real
    feature once per timestep.
    """
    if kind == KIND_CONV:
        return 2 * t_steps * h * w * 9 * c_in * c_out
    if kind == KIND_FC:
        return 2 * t_steps * c_in * c_out
    return 0


@dataclass
class GoldenResult:
    output: SpikeTensor
    scores: np.ndarray
    sops: int
    head: str


def run_golden(model: QuantizedModel, x: SpikeTensor, head: str = "spike_count",
               compare_ge: bool = True) -> GoldenResult:
    """Run the whole model; returns output spikes plus classifier scores.

    head "spike_count" sums output spikes per channel over time and
    space; head "vmem" disables firing on the last weighted layer and
    reads its final membrane potentials instead.
    """
    if head not in ("spike_count", "vmem"):
        raise ConfigError(f"unknown classification head {head!r}")
    weighted = [i for i, l in enumerate(model.layers) if l.kind != KIND_POOL]
    if head == "vmem":
        if not weighted or weighted[-1] != len(model.layers) - 1:
            raise ConfigError("vmem head needs a weighted final layer")

    cur = x.data
    sops = 0
    vmem_scores = None
    for i, layer in enumerate(model.layers):
        readout = head == "vmem" and i == len(model.layers) - 1
        if layer.kind == KIND_POOL:
            cur = golden_maxpool2(cur)
            continue
        fn = golden_conv3x3 if layer.kind == KIND_CONV else golden_fc
        c_in = cur.shape[1] if layer.kind == KIND_CONV else \
            cur.shape[1] * cur.shape[2] * cur.shape[3]
        spikes, last_v = fn(cur, layer.weights, layer.bias, layer.v_th,
                            layer.leak_shift, compare_ge, fire=not readout)
        sops += count_sops(layer.kind, c_in, layer.weights.shape[0],
                           cur.shape[2], cur.shape[3], cur.shape[0])
        cur = spikes
        if layer.pooling:
            cur = golden_maxpool2(cur)
        if readout:
            vmem_scores = last_v.reshape(last_v.shape[0], -1).sum(axis=1)

    out = SpikeTensor(cur)
    if head == "vmem":
        scores = vmem_scores
    else:
        scores = out.data.sum(axis=(0, 2, 3), dtype=np.int64)
    return GoldenResult(out, scores, sops, head)
