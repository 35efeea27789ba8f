"""On-disk spike tensor format.

A tensor file is a 4-byte magic, four little-endian uint32 dims
(T, C, H, W), then the bit payload.  Bit (t, c, y, x) sits at linear
index ((t*H + y)*W + x)*C + c, channel fastest, packed LSB-first into
bytes.  The channel-fastest order is what lets the accelerator slice a
pixel's channel group straight out of consecutive payload bits.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagicError, DimOverflowError, PayloadSizeError

MAGIC = b"FFLY"
HEADER_BYTES = len(MAGIC) + 4 * 4
MAX_BITS = 1 << 33  # refuse absurd headers before allocating anything


@dataclass
class SpikeTensor:
    """A binary activation tensor, kept unpacked as (T, C, H, W) uint8."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.uint8)
        if d.ndim != 4:
            raise ValueError(f"spike tensor must be 4-D, got shape {d.shape}")
        if d.max(initial=0) > 1:
            raise ValueError("spike tensor entries must be 0 or 1")
        self.data = d

    @property
    def t(self) -> int:
        return self.data.shape[0]

    @property
    def c(self) -> int:
        return self.data.shape[1]

    @property
    def h(self) -> int:
        return self.data.shape[2]

    @property
    def w(self) -> int:
        return self.data.shape[3]

    def __eq__(self, other):
        return isinstance(other, SpikeTensor) and \
            self.data.shape == other.data.shape and \
            bool(np.all(self.data == other.data))

    # -- serialization -----------------------------------------------------

    def to_bytes(self) -> bytes:
        header = MAGIC + struct.pack("<4I", *self.data.shape)
        bits = self.data.transpose(0, 2, 3, 1).reshape(-1)  # channel fastest
        return header + np.packbits(bits, bitorder="little").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SpikeTensor":
        if blob[:len(MAGIC)] != MAGIC:
            raise BadMagicError(f"expected magic {MAGIC!r}")
        if len(blob) < HEADER_BYTES:
            raise PayloadSizeError("file shorter than its header")
        t, c, h, w = struct.unpack("<4I", blob[len(MAGIC):HEADER_BYTES])
        if min(t, c, h, w) == 0:
            raise DimOverflowError(f"zero dimension in header ({t}, {c}, {h}, {w})")
        bits = t * c * h * w
        if bits > MAX_BITS:
            raise DimOverflowError(f"header implies {bits} bits, limit {MAX_BITS}")
        expected = (bits + 7) // 8
        payload = blob[HEADER_BYTES:]
        if len(payload) != expected:
            raise PayloadSizeError(
                f"payload is {len(payload)} bytes, dims require {expected}"
            )
        flat = np.unpackbits(
            np.frombuffer(payload, dtype=np.uint8), count=bits, bitorder="little"
        )
        return cls(flat.reshape(t, h, w, c).transpose(0, 3, 1, 2))

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "SpikeTensor":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, t, c, h, w) -> "SpikeTensor":
        return cls(np.zeros((t, c, h, w), dtype=np.uint8))

    @classmethod
    def random(cls, t, c, h, w, density: float, rng) -> "SpikeTensor":
        """Bernoulli spikes at the given density (0 and 1 are exact)."""
        return cls((rng.random((t, c, h, w)) < density).astype(np.uint8))
