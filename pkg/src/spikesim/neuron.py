"""Membrane update engine: accumulate, leak, fire, reset.

The accumulator bank is a 24-bit two's-complement store shared by all
phases.  A timestep ends with a threshold pass (leak, compare,
conditional reset); the final timestep's pass does the same comparison
but clears every accumulator afterwards so the next inference starts
from rest.  Leak is the hardware-friendly v - (v >> k), an exact
multiply by (1 - 2^-k) with floor rounding.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .arith import ACC_MAX, ACC_MIN, THRESH_MAX, THRESH_MIN, wrap24
from .errors import ConfigError

LEAK_SHIFT_MIN, LEAK_SHIFT_MAX = 1, 23


class Phase(Enum):
    ACCUMULATE = "accumulate"
    THRESHOLD = "threshold"
    CLEAR = "clear"


@dataclass
class NeuronConfig:
    """Per-layer neuron parameters, already quantized."""

    v_th: int
    leak_shift: int | None = None  # None: integrate-and-fire (no leak)
    bias: np.ndarray | None = None  # per output channel, accumulator units
    compare_ge: bool = True  # fire on v >= v_th; False for strict >

    def __post_init__(self):
        if not THRESH_MIN <= int(self.v_th) <= THRESH_MAX:
            raise ConfigError(f"threshold {self.v_th} outside the 18-bit register")
        if self.leak_shift is not None and not \
                LEAK_SHIFT_MIN <= self.leak_shift <= LEAK_SHIFT_MAX:
            raise ConfigError(
                f"leak shift {self.leak_shift} outside "
                f"{LEAK_SHIFT_MIN}..{LEAK_SHIFT_MAX}"
            )
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.int64)
            if np.any(b < ACC_MIN) or np.any(b > ACC_MAX):
                raise ConfigError("bias outside the 24-bit accumulator")
            self.bias = b


def leak(v, shift):
    """One leak step: v - (v >> shift), arithmetic shift.

    Works on Python ints and integer ndarrays alike.  shift None is the
    IF case and returns v unchanged.
    """
    if shift is None:
        return v
    return v - (v >> shift)


def fire_and_update(v: int, cfg: NeuronConfig, phase: Phase):
    """End-of-timestep update for one neuron; returns (spike, v_next)."""
    if phase is Phase.ACCUMULATE:
        raise ConfigError("fire_and_update runs only in threshold or clear phases")
    decayed = leak(int(v), cfg.leak_shift)
    fired = decayed >= cfg.v_th if cfg.compare_ge else decayed > cfg.v_th
    if phase is Phase.CLEAR:
        return int(fired), 0
    return int(fired), 0 if fired else decayed


class VmemBuffer:
    """Accumulator bank: `lanes` output channels x `positions` pixels."""

    def __init__(self, lanes: int, positions: int):
        if lanes < 1 or positions < 1:
            raise ConfigError("vmem needs positive lane and position counts")
        self.v = np.zeros((lanes, positions), dtype=np.int64)
        self.overflows = 0  # diagnostic: wrap events on accumulate
        self.last_decayed = None  # post-leak potentials of the latest pass

    def accumulate(self, psums) -> None:
        """Wrap-add one tile pass of partial sums, shape (lanes, positions)."""
        raw = self.v + np.asarray(psums, dtype=np.int64)
        wrapped = wrap24(raw)
        self.overflows += int(np.count_nonzero(raw != wrapped))
        self.v = wrapped

    def add_bias(self, bias) -> None:
        """Inject the per-lane bias, once at the start of each timestep."""
        bias = np.asarray(bias, dtype=np.int64).reshape(-1, 1)
        self.accumulate(np.broadcast_to(bias, self.v.shape))

    def finish_timestep(self, cfg: NeuronConfig, last: bool,
                        fire: bool = True) -> np.ndarray:
        """Threshold pass over the whole bank; returns the spike map.

        `last` selects the clearing variant: the comparison still runs
        and the spikes are still emitted, but every accumulator resets
        regardless of firing.  `fire` False suppresses spikes and
        resets, used when the classifier reads potentials directly.
        The leak result never needs a re-wrap: |v - (v >> k)| <= |v|.
        """
        decayed = leak(self.v, cfg.leak_shift)
        self.last_decayed = decayed.copy()
        if fire:
            spikes = decayed >= cfg.v_th if cfg.compare_ge else decayed > cfg.v_th
        else:
            spikes = np.zeros_like(decayed, dtype=bool)
        if last:
            self.v = np.zeros_like(self.v)
        elif fire:
            self.v = np.where(spikes, 0, decayed)
        else:
            self.v = decayed
        return spikes.astype(np.uint8)


def maxpool2(tensor) -> np.ndarray:
    """2x2 stride-2 OR-pooling per timestep over a (T, C, H, W) spike tensor."""
    tensor = np.asarray(tensor, dtype=np.uint8)
    t, c, h, w = tensor.shape
    if h % 2 or w % 2:
        raise ConfigError(f"pooling needs even spatial dims, got {h}x{w}")
    q = tensor.reshape(t, c, h // 2, 2, w // 2, 2)
    return q.max(axis=5).max(axis=3).astype(np.uint8)
