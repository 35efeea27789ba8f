"""Pure-numpy batched kernels.

Same packed-word SWAR arithmetic as the scalar chain model, applied to
whole uint64 arrays.  This is the fallback when numba is unavailable
and the reference the jitted backend must match bit for bit.
"""

import numpy as np

from ..arith import MASK_LOW11, MASK_MSB

NAME = "numpy"

_LOW = np.uint64(MASK_LOW11)
_MSB = np.uint64(MASK_MSB)
_ZERO = np.uint64(0)
_LANE = np.uint64(0xFFF)
_SIGN = np.int64(0x800)


def _swar_add(a, b):
    return ((a & _LOW) + (b & _LOW)) ^ ((a ^ b) & _MSB)


def _unpack_lanes(words):
    """(..., ) uint64 -> (..., 4) int64 signed lane values."""
    lanes = np.stack(
        [(words >> np.uint64(12 * i)) & _LANE for i in range(4)], axis=-1
    ).astype(np.int64)
    return lanes - ((lanes & _SIGN) << np.int64(1))


def tile_psums(vectors, word_ab, word_c):
    """Batched array pass: every spike vector against the loaded tile.

    vectors: (S, N) uint8 in {0, 1}; word_ab/word_c: (cols, chains, 8)
    uint64 from pack_tile.  Returns (S, M) int32 partial sums, output
    channel 4*col + lane.
    """
    s, n = vectors.shape
    cols, chains, slices = word_ab.shape
    sel = vectors.reshape(s, 1, chains, slices, 2).astype(bool)
    a_on = np.where(sel[..., 0], word_ab[None], _ZERO)  # (S, cols, chains, 8)
    c_on = np.where(sel[..., 1], word_c[None], _ZERO)
    word = np.zeros((s, cols, chains), dtype=np.uint64)
    for k in range(slices):  # cascade order is part of the contract
        word = _swar_add(_swar_add(a_on[..., k], c_on[..., k]), word)
    sums = _unpack_lanes(word).sum(axis=2)  # exact adder tree over chains
    return sums.reshape(s, cols * 4).astype(np.int32)


def pe_forward_batch(spikes, blocks):
    """Many independent chains at once.

    spikes: (B, 16) uint8; blocks: (B, 16, 4) int8.
    Returns (B, 4) int32, equal to running each block through a chain.
    """
    spikes = np.asarray(spikes, dtype=np.uint8)
    blocks = np.asarray(blocks)
    b = spikes.shape[0]
    fields = (blocks.astype(np.int64) & 0xFFF).astype(np.uint64)
    shifts = (np.arange(4, dtype=np.uint64) * 12).reshape(1, 1, 4)
    words = (fields << shifts).sum(axis=2, dtype=np.uint64)  # (B, 16)
    word = np.zeros(b, dtype=np.uint64)
    for k in range(8):
        x = np.where(spikes[:, 2 * k].astype(bool), words[:, 2 * k], _ZERO)
        c = np.where(spikes[:, 2 * k + 1].astype(bool), words[:, 2 * k + 1], _ZERO)
        word = _swar_add(_swar_add(x, c), word)
    return _unpack_lanes(word).astype(np.int32)
