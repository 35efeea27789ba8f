"""Input delivery: 3x3 sliding windows for conv layers, transaction
gathering for fully connected layers.

A window vector concatenates the nine kernel taps of one output
position, kernel row outermost and channel fastest: bit
(kh*3 + kw)*P + c selects tap (kh, kw) of channel c.  Padding rows and
columns contribute zeros (stride 1, same padding; nothing else is
supported).
"""

import numpy as np

from .errors import ConfigError

KERNEL = 3  # the window former is hardwired to 3x3


class LineBuffer:
    """Streaming 3x3 window former over a raster-order bundle stream.

    Keeps the two most recent input rows plus a 3x3 window register.
    While input row y+1 streams in, the windows centred on row y are
    emitted; the bottom row's windows drain after the last input with
    zero padding below.
    """

    def __init__(self, width: int, channels: int):
        if width < 1 or channels < 1:
            raise ConfigError("line buffer needs positive width and channel count")
        self.width = width
        self.channels = channels
        # rows[1] is the last pushed row, rows[0] the one before it
        self.rows = np.zeros((2, width, channels), dtype=np.uint8)
        self.window = np.zeros((KERNEL, KERNEL, channels), dtype=np.uint8)
        self.cursor = 0  # windows emitted so far

    def _emit_row(self, above, center, below):
        """Slide the window register across one center row."""
        rows3 = np.stack([above, center, below])  # (3, W, P)
        win = self.window
        win[:] = 0
        win[:, 2, :] = rows3[:, 0, :]  # column 0 waits in the right tap
        for x in range(self.width):
            win[:, 0, :] = win[:, 1, :]
            win[:, 1, :] = win[:, 2, :]
            if x + 1 < self.width:
                win[:, 2, :] = rows3[:, x + 1, :]
            else:
                win[:, 2, :] = 0
            self.cursor += 1
            yield win.reshape(-1).copy()

    def stream(self, spike_map):
        """Yield the (9*channels,) window vector of every output position."""
        spike_map = np.asarray(spike_map, dtype=np.uint8)
        if spike_map.ndim != 3 or spike_map.shape[1] != self.width \
                or spike_map.shape[2] != self.channels:
            raise ConfigError(
                f"map shape {spike_map.shape} does not match (H, {self.width}, {self.channels})"
            )
        h = spike_map.shape[0]
        zero = np.zeros((self.width, self.channels), dtype=np.uint8)
        for r in range(h):
            if r >= 1:
                above = self.rows[0] if r >= 2 else zero
                yield from self._emit_row(above, self.rows[1], spike_map[r])
            self.rows[0] = self.rows[1]
            self.rows[1] = spike_map[r]
        above = self.rows[0] if h >= 2 else zero
        yield from self._emit_row(above, self.rows[1], zero)


def lb_stream(spike_map) -> np.ndarray:
    """Run a map through a fresh LineBuffer; (H*W, 9*channels) in raster order."""
    spike_map = np.asarray(spike_map, dtype=np.uint8)
    h, w, p = spike_map.shape
    buf = LineBuffer(w, p)
    return np.stack(list(buf.stream(spike_map)))


def extract_windows(spike_map) -> np.ndarray:
    """Vectorized equivalent of lb_stream (same bit order, same padding)."""
    m = np.asarray(spike_map, dtype=np.uint8)
    h, w, p = m.shape
    padded = np.zeros((h + 2, w + 2, p), dtype=np.uint8)
    padded[1:-1, 1:-1] = m
    taps = [padded[kh:kh + h, kw:kw + w] for kh in range(KERNEL) for kw in range(KERNEL)]
    return np.concatenate(taps, axis=2).reshape(h * w, KERNEL * KERNEL * p)


def fc_transactions(frame, par: int) -> np.ndarray:
    """Serialize one timestep's map into P-channel pixel transactions.

    Pixels stream in raster order; each pixel sends ceil(C/P) groups of
    P consecutive channels, the last group zero-padded.  Result shape:
    (H*W*ceil(C/P), P).
    """
    frame = np.asarray(frame, dtype=np.uint8)
    c, h, w = frame.shape
    groups = -(-c // par)
    padded = np.zeros((groups * par, h, w), dtype=np.uint8)
    padded[:c] = frame
    return (
        padded.reshape(groups, par, h, w)
        .transpose(2, 3, 0, 1)
        .reshape(h * w * groups, par)
    )


def mlp_gather(transactions, par: int) -> np.ndarray:
    """Group P-bit transactions into the 9P-bit vectors the array eats.

    The stream is zero-padded to a multiple of nine transactions so
    every vector is full; the weight tiles hold zeros against the
    padding positions.
    """
    tr = np.asarray(transactions, dtype=np.uint8).reshape(-1, par)
    n = tr.shape[0]
    groups = max(1, -(-n // (KERNEL * KERNEL)))
    padded = np.zeros((groups * KERNEL * KERNEL, par), dtype=np.uint8)
    padded[:n] = tr
    return padded.reshape(groups, KERNEL * KERNEL * par)
