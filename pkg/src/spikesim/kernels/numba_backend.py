"""Numba-jitted batched kernels, bit-identical to the numpy backend.

The SWAR formulas are spelled out per element here; explicit loops let
numba fuse the gating, the cascade and the adder tree into one pass
without materializing the (S, cols, chains, slices) intermediates the
numpy backend needs.
"""

import numpy as np
from numba import njit

from ..arith import MASK_LOW11, MASK_MSB

NAME = "numba"

_LOW = np.uint64(MASK_LOW11)
_MSB = np.uint64(MASK_MSB)
_ZERO = np.uint64(0)
_LANE = np.uint64(0xFFF)
_FIELD = np.uint64(0xFFF)


@njit(cache=True)
def _tile_psums_jit(vectors, word_ab, word_c, out):
    s = vectors.shape[0]
    cols = word_ab.shape[0]
    chains = word_ab.shape[1]
    for si in range(s):
        for c in range(cols):
            acc0 = np.int64(0)
            acc1 = np.int64(0)
            acc2 = np.int64(0)
            acc3 = np.int64(0)
            for r in range(chains):
                word = _ZERO
                base = r * 16
                for k in range(8):
                    x = word_ab[c, r, k] if vectors[si, base + 2 * k] else _ZERO
                    y = word_c[c, r, k] if vectors[si, base + 2 * k + 1] else _ZERO
                    t = ((x & _LOW) + (y & _LOW)) ^ ((x ^ y) & _MSB)
                    word = ((t & _LOW) + (word & _LOW)) ^ ((t ^ word) & _MSB)
                l0 = np.int64(word & _LANE)
                l1 = np.int64((word >> np.uint64(12)) & _LANE)
                l2 = np.int64((word >> np.uint64(24)) & _LANE)
                l3 = np.int64((word >> np.uint64(36)) & _LANE)
                if l0 >= 2048:
                    l0 -= 4096
                if l1 >= 2048:
                    l1 -= 4096
                if l2 >= 2048:
                    l2 -= 4096
                if l3 >= 2048:
                    l3 -= 4096
                acc0 += l0
                acc1 += l1
                acc2 += l2
                acc3 += l3
            out[si, c * 4 + 0] = acc0
            out[si, c * 4 + 1] = acc1
            out[si, c * 4 + 2] = acc2
            out[si, c * 4 + 3] = acc3


def tile_psums(vectors, word_ab, word_c):
    """Batched array pass; see the numpy backend for the contract."""
    s = vectors.shape[0]
    cols = word_ab.shape[0]
    out = np.empty((s, cols * 4), dtype=np.int32)
    _tile_psums_jit(
        np.ascontiguousarray(vectors),
        np.ascontiguousarray(word_ab),
        np.ascontiguousarray(word_c),
        out,
    )
    return out


@njit(cache=True)
def _pe_forward_jit(spikes, blocks, out):
    b = spikes.shape[0]
    for i in range(b):
        word = _ZERO
        for k in range(8):
            xw = _ZERO
            yw = _ZERO
            if spikes[i, 2 * k]:
                for lane in range(4):
                    f = np.uint64(np.int64(blocks[i, 2 * k, lane])) & _FIELD
                    xw |= f << np.uint64(12 * lane)
            if spikes[i, 2 * k + 1]:
                for lane in range(4):
                    f = np.uint64(np.int64(blocks[i, 2 * k + 1, lane])) & _FIELD
                    yw |= f << np.uint64(12 * lane)
            t = ((xw & _LOW) + (yw & _LOW)) ^ ((xw ^ yw) & _MSB)
            word = ((t & _LOW) + (word & _LOW)) ^ ((t ^ word) & _MSB)
        for lane in range(4):
            v = np.int64((word >> np.uint64(12 * lane)) & _LANE)
            if v >= 2048:
                v -= 4096
            out[i, lane] = v


def pe_forward_batch(spikes, blocks):
    """Many independent chains at once; see the numpy backend."""
    spikes = np.ascontiguousarray(spikes, dtype=np.uint8)
    blocks = np.ascontiguousarray(blocks, dtype=np.int8)
    out = np.empty((spikes.shape[0], 4), dtype=np.int32)
    _pe_forward_jit(spikes, blocks, out)
    return out
