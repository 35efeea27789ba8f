"""Array-level model: a grid of slice chains with per-column adder trees.

The array is M outputs wide and N inputs tall.  Each column owns four
output channels (the four lanes of its chains' packed words); each of
its N/16 chains covers sixteen consecutive input rows.  The cascade
never crosses a chain boundary; an exact integer adder tree folds the
per-chain lane sums into accumulator inputs.
"""

import math

import numpy as np

from .arith import ACC_MAX, ACC_MIN, LANE_MASK
from .dsp import CHAIN_COLS, CHAIN_ROWS, CHAIN_SLICES, DspSlice, PeChain
from .errors import ConfigError


def tree_depth(n_inputs: int) -> int:
    """Pipeline depth of a balanced adder tree over n_inputs terms."""
    if n_inputs < 1:
        raise ConfigError("adder tree needs at least one input")
    return math.ceil(math.log2(n_inputs)) if n_inputs > 1 else 0


def adder_tree_reduce(parts):
    """Fold per-chain lane quadruples into exact lane sums.

    The tree widens at every level, so there is no intermediate wrap.
    Even the widest supported column (18 chains of +/-2048 lanes) stays
    far inside the 24-bit accumulator range; that is asserted here
    because the hardware relies on it.
    """
    total = [0, 0, 0, 0]
    for quad in parts:
        for lane in range(CHAIN_COLS):
            total[lane] += int(quad[lane])
    for v in total:
        assert ACC_MIN <= v <= ACC_MAX, "adder tree output left INT24"
    return total


def pack_tile(tile: np.ndarray):
    """Pack an (M, N) INT8 tile into per-slice 48-bit word pairs.

    Returns (word_ab, word_c), each uint64 with shape
    (M/4 columns, N/16 chains, 8 slices).  word_ab holds the even input
    row of each slice, word_c the odd row; output channel 4*col + lane
    sits in lane `lane` of the column's words.
    """
    m, n = tile.shape
    fields = (tile.astype(np.int64) & LANE_MASK).astype(np.uint64)
    # index [col, lane, chain, slice, row parity]
    fields = fields.reshape(m // CHAIN_COLS, CHAIN_COLS, n // CHAIN_ROWS, CHAIN_SLICES, 2)
    shifts = (np.arange(CHAIN_COLS, dtype=np.uint64) * 12).reshape(1, CHAIN_COLS, 1, 1, 1)
    words = (fields << shifts).sum(axis=1, dtype=np.uint64)
    return np.ascontiguousarray(words[..., 0]), np.ascontiguousarray(words[..., 1])


class SystolicArray:
    """M x N spike-matrix engine organized as (M/4) columns of (N/16) chains."""

    def __init__(self, m: int = 16, n: int = 144):
        if m <= 0 or m % CHAIN_COLS:
            raise ConfigError(f"M={m} must be a positive multiple of {CHAIN_COLS}")
        if n <= 0 or n % CHAIN_ROWS:
            raise ConfigError(f"N={n} must be a positive multiple of {CHAIN_ROWS}")
        self.m = m
        self.n = n
        self.cols = m // CHAIN_COLS
        self.chains_per_col = n // CHAIN_ROWS
        self.chains = [
            [PeChain() for _ in range(self.chains_per_col)] for _ in range(self.cols)
        ]
        self.tile_id = None
        # Packed mirror of the loaded weights, consumed by the batched
        # kernels.  Kept bit-identical with the slice registers.
        self.word_ab = np.zeros(
            (self.cols, self.chains_per_col, CHAIN_SLICES), dtype=np.uint64
        )
        self.word_c = np.zeros_like(self.word_ab)

    @property
    def fill_latency(self) -> int:
        """Cycles from first spike vector in to first valid sum out."""
        return CHAIN_SLICES * DspSlice.PIPELINE_LATENCY + tree_depth(self.chains_per_col) + 1

    def load_tile(self, tile, tile_id=None) -> None:
        """Make an (M, N) INT8 tile the array's stationary weights."""
        tile = np.asarray(tile)
        if tile.shape != (self.m, self.n):
            raise ConfigError(f"tile shape {tile.shape} does not match {self.m}x{self.n}")
        if tile.dtype != np.int8:
            if np.any(tile < -128) or np.any(tile > 127):
                raise ConfigError("tile weights outside INT8")
            tile = tile.astype(np.int8)
        self.word_ab, self.word_c = pack_tile(tile)
        # Distribute the same packed words to the slice registers.
        for c in range(self.cols):
            for r in range(self.chains_per_col):
                chain = self.chains[c][r]
                for k, sl in enumerate(chain.slices):
                    sl.word_ab = int(self.word_ab[c, r, k])
                    sl.word_c = int(self.word_c[c, r, k])
                    sl.loaded = True
        self.tile_id = tile_id

    def step(self, spikes) -> np.ndarray:
        """One spike vector through every chain and tree; returns M sums.

        Output index o = 4*col + lane is the product row(spikes) x
        column o of the weight tile.
        """
        spikes = np.asarray(spikes)
        if spikes.shape != (self.n,):
            raise ConfigError(f"spike vector shape {spikes.shape}, expected ({self.n},)")
        out = np.zeros(self.m, dtype=np.int32)
        for c in range(self.cols):
            parts = [
                self.chains[c][r].forward(spikes[r * CHAIN_ROWS:(r + 1) * CHAIN_ROWS])
                for r in range(self.chains_per_col)
            ]
            out[c * CHAIN_COLS:(c + 1) * CHAIN_COLS] = adder_tree_reduce(parts)
        return out
