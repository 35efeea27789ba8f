"""Array geometry, adder tree, tile packing, and the matmul equivalence."""

import numpy as np
import pytest

from spikesim import arith, kernels
from spikesim.errors import ConfigError
from spikesim.systolic import SystolicArray, adder_tree_reduce, pack_tile, \
    tree_depth


def array_oracle(spikes, tile):
    return np.asarray(spikes, dtype=np.int64) @ np.asarray(tile, dtype=np.int64).T


# ---------------------------------------------------------------------------
# adder tree
# ---------------------------------------------------------------------------


def test_tree_depth():
    assert tree_depth(1) == 0
    assert tree_depth(2) == 1
    assert tree_depth(3) == 2
    assert tree_depth(9) == 4
    assert tree_depth(18) == 5
    with pytest.raises(ConfigError):
        tree_depth(0)


def test_adder_tree_exact_worst_case():
    # nine chains all at the lane maximum: exact, no wrap anywhere
    parts = [(2047, -2048, 1, -1)] * 9
    assert adder_tree_reduce(parts) == [18423, -18432, 9, -9]


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("m,n", [(0, 144), (10, 144), (16, 0), (16, 100), (-4, 16)])
def test_geometry_rejected(m, n):
    with pytest.raises(ConfigError):
        SystolicArray(m, n)


def test_geometry_accepted():
    arr = SystolicArray(32, 288)
    assert arr.cols == 8 and arr.chains_per_col == 18
    assert arr.fill_latency > 16


def test_load_tile_validation():
    arr = SystolicArray(16, 144)
    with pytest.raises(ConfigError):
        arr.load_tile(np.zeros((16, 48), dtype=np.int8))
    with pytest.raises(ConfigError):
        arr.load_tile(np.full((16, 144), 300))


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------


def test_pack_tile_matches_slice_registers(rng):
    """Packed words hold exactly the per-slice lane fields."""
    tile = rng.integers(-128, 128, size=(16, 48)).astype(np.int8)
    wab, wc = pack_tile(tile)
    for col in range(4):
        for chain in range(3):
            for k in range(8):
                even = 16 * chain + 2 * k
                expect_ab = arith.pack4(*(int(tile[4 * col + l, even])
                                          for l in range(4)))
                expect_c = arith.pack4(*(int(tile[4 * col + l, even + 1])
                                         for l in range(4)))
                assert int(wab[col, chain, k]) == expect_ab
                assert int(wc[col, chain, k]) == expect_c


def test_array_mirrors_chain_registers(rng):
    arr = SystolicArray(8, 32)
    tile = rng.integers(-128, 128, size=(8, 32)).astype(np.int8)
    arr.load_tile(tile, tile_id=7)
    assert arr.tile_id == 7
    for c in range(arr.cols):
        for r in range(arr.chains_per_col):
            for k, sl in enumerate(arr.chains[c][r].slices):
                assert sl.word_ab == int(arr.word_ab[c, r, k])
                assert sl.word_c == int(arr.word_c[c, r, k])


# ---------------------------------------------------------------------------
# full array vs oracle
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("m", [8, 16, 32])
@pytest.mark.parametrize("n", [16, 48, 144, 288])
def test_array_step_matches_oracle(m, n, rng):
    """Object path on a few vectors, batched kernel on many."""
    arr = SystolicArray(m, n)
    backend = kernels.get_backend()
    for _ in range(3):
        tile = rng.integers(-128, 128, size=(m, n)).astype(np.int8)
        arr.load_tile(tile)
        spikes = (rng.random((40, n)) < rng.random()).astype(np.uint8)
        expect = spikes.astype(np.int64) @ tile.astype(np.int64).T
        for i in range(4):
            assert np.array_equal(arr.step(spikes[i]), expect[i])
        assert np.array_equal(backend.tile_psums(spikes, arr.word_ab, arr.word_c),
                              expect)


def test_array_extremes():
    arr = SystolicArray(16, 144)
    arr.load_tile(np.full((16, 144), -128, dtype=np.int8))
    out = arr.step(np.ones(144, dtype=np.uint8))
    assert np.all(out == 144 * -128)
    arr.load_tile(np.full((16, 144), 127, dtype=np.int8))
    out = arr.step(np.ones(144, dtype=np.uint8))
    assert np.all(out == 144 * 127)
