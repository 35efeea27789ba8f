"""Functional model of one multiplier slice and an eight-slice chain.

A slice in SIMD four-lane mode adds three packed words per cycle: two
gated weight words and the cascade input of the previous slice.  Spike
bits act as multiplexer selects on the weight ports, so a chain of
eight slices computes a 1x16 binary spike row times a 16x4 INT8 weight
block without a single hardware multiplier.  One slice therefore
contributes 16 synaptic operations per cycle (2 rows x 4 lanes x 2 ops
per accumulate).
"""

import numpy as np

from .arith import WORD_LANES, pack4, simd_add12, unpack4
from .errors import ConfigError

# One slice folds two weight rows into the cascade per cycle, so a
# 16-row block needs eight slices.
ROWS_PER_SLICE = 2
CHAIN_SLICES = 8
CHAIN_ROWS = ROWS_PER_SLICE * CHAIN_SLICES
CHAIN_COLS = WORD_LANES


class DspSlice:
    """One SIMD-mode slice: two packed weight registers, one 3-input adder."""

    # Register stages per slice (input + post-adder), used only for
    # pipeline-fill accounting.  The functional model is untimed.
    PIPELINE_LATENCY = 2

    def __init__(self):
        self.word_ab = 0  # packed weights gated by the even spike row (A:B port)
        self.word_c = 0   # packed weights gated by the odd spike row (C port)
        self.loaded = False

    def load(self, row_ab, row_c) -> None:
        """Latch the four INT8 weights of each of the slice's two rows."""
        self.word_ab = pack4(*(int(w) for w in row_ab))
        self.word_c = pack4(*(int(w) for w in row_c))
        self.loaded = True

    def step(self, spike_ab: int, spike_c: int, cascade_in: int) -> int:
        """One cycle: gate each weight word by its spike bit, add the cascade."""
        x = self.word_ab if spike_ab else 0
        w = self.word_c if spike_c else 0
        return simd_add12(simd_add12(x, w), cascade_in)


class PeChain:
    """Eight cascaded slices computing spikes(1x16) @ weights(16x4).

    Row r of the weight block is gated by spike bit r; even rows sit in
    a slice's A:B word and odd rows in its C word, so slice k serves
    rows 2k and 2k+1.  The cascade carries packed partial sums; with
    INT8 weights the running lane sums stay inside INT12 (16 * 127 =
    2032, 16 * -128 = -2048), so no intermediate wrap can occur.
    """

    def __init__(self):
        self.slices = [DspSlice() for _ in range(CHAIN_SLICES)]

    @property
    def fill_latency(self) -> int:
        return CHAIN_SLICES * DspSlice.PIPELINE_LATENCY

    def load_weights(self, block) -> None:
        """Load a 16x4 INT8 block, row r against spike bit r."""
        block = np.asarray(block)
        if block.shape != (CHAIN_ROWS, CHAIN_COLS):
            raise ConfigError(
                f"chain expects a {CHAIN_ROWS}x{CHAIN_COLS} block, got {block.shape}"
            )
        for k, sl in enumerate(self.slices):
            sl.load(block[2 * k], block[2 * k + 1])

    def forward(self, spikes):
        """Propagate one 16-bit spike vector down the cascade."""
        if len(spikes) != CHAIN_ROWS:
            raise ConfigError(f"chain expects {CHAIN_ROWS} spike bits, got {len(spikes)}")
        word = 0  # the first slice's cascade input is tied low
        for k, sl in enumerate(self.slices):
            word = sl.step(int(spikes[2 * k]), int(spikes[2 * k + 1]), word)
        return unpack4(word)


def pe_forward(spikes, block):
    """One-shot helper: load a block into a fresh chain, run one vector."""
    chain = PeChain()
    chain.load_weights(block)
    return chain.forward(spikes)
