"""File format: exact byte layout, round trips, and error taxonomy."""

import struct

import numpy as np
import pytest

from spikesim.errors import (BadMagicError, DimOverflowError, PayloadSizeError)
from spikesim.spikeio import HEADER_BYTES, MAGIC, SpikeTensor


def bit_index_oracle(t, c, y, x, dims):
    _, ch, h, w = dims
    return ((t * h + y) * w + x) * ch + c


# ---------------------------------------------------------------------------
# exact layout
# ---------------------------------------------------------------------------


def test_minimal_file_is_21_bytes():
    st_ = SpikeTensor(np.ones((1, 1, 1, 1), dtype=np.uint8))
    blob = st_.to_bytes()
    assert len(blob) == HEADER_BYTES + 1 == 21
    assert blob[:4] == MAGIC == b"FFLY"
    assert struct.unpack("<4I", blob[4:20]) == (1, 1, 1, 1)
    assert blob[20] == 0x01


def test_eight_channels_fill_one_byte():
    st_ = SpikeTensor(np.ones((1, 8, 1, 1), dtype=np.uint8))
    blob = st_.to_bytes()
    assert blob[HEADER_BYTES:] == b"\xff"


def test_single_bit_lands_at_linear_index(rng):
    for _ in range(40):
        dims = (int(rng.integers(1, 4)), int(rng.integers(1, 9)),
                int(rng.integers(1, 6)), int(rng.integers(1, 6)))
        t = int(rng.integers(0, dims[0]))
        c = int(rng.integers(0, dims[1]))
        y = int(rng.integers(0, dims[2]))
        x = int(rng.integers(0, dims[3]))
        data = np.zeros(dims, dtype=np.uint8)
        data[t, c, y, x] = 1
        payload = SpikeTensor(data).to_bytes()[HEADER_BYTES:]
        idx = bit_index_oracle(t, c, y, x, dims)
        assert payload[idx // 8] == 1 << (idx % 8)
        assert sum(payload) == 1 << (idx % 8)


def test_roundtrip_random(rng):
    for _ in range(30):
        dims = tuple(int(d) for d in rng.integers(1, 7, size=4))
        st_ = SpikeTensor.random(*dims, density=float(rng.random()), rng=rng)
        assert SpikeTensor.from_bytes(st_.to_bytes()) == st_


def test_file_roundtrip(tmp_path, rng):
    st_ = SpikeTensor.random(2, 3, 4, 5, 0.5, rng)
    path = tmp_path / "t.spk"
    st_.save(path)
    assert SpikeTensor.load(path) == st_


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------


def good_blob():
    return SpikeTensor(np.ones((1, 2, 2, 2), dtype=np.uint8)).to_bytes()


def test_bad_magic():
    blob = b"XXXX" + good_blob()[4:]
    with pytest.raises(BadMagicError):
        SpikeTensor.from_bytes(blob)
    with pytest.raises(BadMagicError):
        SpikeTensor.from_bytes(b"FF")


def test_truncated_and_oversized_payload():
    blob = good_blob()
    with pytest.raises(PayloadSizeError):
        SpikeTensor.from_bytes(blob[:-1])
    with pytest.raises(PayloadSizeError):
        SpikeTensor.from_bytes(blob + b"\x00")
    with pytest.raises(PayloadSizeError):
        SpikeTensor.from_bytes(blob[:10])  # header itself cut short


def test_dim_overflow():
    header = MAGIC + struct.pack("<4I", 1 << 20, 1 << 20, 4, 4)
    with pytest.raises(DimOverflowError):
        SpikeTensor.from_bytes(header)
    zero = MAGIC + struct.pack("<4I", 1, 0, 4, 4)
    with pytest.raises(DimOverflowError):
        SpikeTensor.from_bytes(zero)


def test_constructor_rejects_non_binary():
    with pytest.raises(ValueError):
        SpikeTensor(np.full((1, 1, 1, 1), 2, dtype=np.uint8))
    with pytest.raises(ValueError):
        SpikeTensor(np.zeros((2, 2), dtype=np.uint8))
