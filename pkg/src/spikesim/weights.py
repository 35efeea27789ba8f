"""The weight supply path: reuse FIFO, elastic buffering, width adapters.

The interesting component is the partial-reuse FIFO.  The tiling loop
runs timesteps *inside* each output-group pass, so the same weight
block is needed T times in a row.  Instead of refetching, the FIFO's
read side jumps back to the block start until the block has been
replayed T times, and only then retires it.  The off-chip link
therefore sends every weight exactly once per layer.
"""

from collections import deque

from .errors import ConfigError, StreamError

# ---------------------------------------------------------------------------
# partial-reuse FIFO
# ---------------------------------------------------------------------------


class PartialReuseFifo:
    """Ring FIFO whose read side replays each block a fixed number of times.

    Pointers are monotonic word counts; ring addresses are the counts
    modulo the depth.  The region [start, start + block_len) holds the
    block currently being replayed and is protected: a push is refused
    while the write pointer sits a full depth ahead of start, so no
    live word can ever be overwritten.
    """

    def __init__(self, depth: int, block_len: int, reuse: int, trace=None):
        if depth < 1:
            raise ConfigError("fifo depth must be positive")
        if not 1 <= block_len <= depth:
            raise ConfigError(f"block of {block_len} cannot fit a depth-{depth} ring")
        if reuse < 1:
            raise ConfigError("reuse count must be at least 1")
        self.depth = depth
        self.block_len = block_len
        self.reuse = reuse
        self.slots = [None] * depth
        self.push_abs = 0     # total words accepted
        self.pop_abs = 0      # absolute index of the next word to read
        self.start_abs = 0    # absolute index of the current block's first word
        self.replays_done = 0
        self.trace = trace
        self.cycle = 0

    # -- status ------------------------------------------------------------

    @property
    def full(self) -> bool:
        return self.push_abs - self.start_abs >= self.depth

    @property
    def empty(self) -> bool:
        """True while the current block is not yet fully resident."""
        return self.push_abs < self.start_abs + self.block_len

    @property
    def occupancy(self) -> int:
        """Live words in the ring, the protected block included."""
        return self.push_abs - self.start_abs

    def tick(self) -> None:
        self.cycle += 1

    def _record(self, op, accepted):
        if self.trace is not None:
            self.trace.append({
                "cycle": self.cycle,
                "op": op,
                "accepted": accepted,
                "push": self.push_abs,
                "pop": self.pop_abs,
                "start": self.start_abs,
                "replays": self.replays_done,
            })

    # -- data path ---------------------------------------------------------

    def push(self, word) -> bool:
        """Offer one word; returns False while the ring is protected-full."""
        accepted = not self.full
        if accepted:
            self.slots[self.push_abs % self.depth] = word
            self.push_abs += 1
        self._record("push", accepted)
        return accepted

    def pop(self):
        """Read the next word of the replay sequence, or None when starved."""
        if self.empty:
            self._record("pop", False)
            return None
        word = self.slots[self.pop_abs % self.depth]
        self.pop_abs += 1
        if self.pop_abs == self.start_abs + self.block_len:
            self.replays_done += 1
            if self.replays_done < self.reuse:
                self.pop_abs = self.start_abs
            else:
                self.start_abs += self.block_len
                self.pop_abs = self.start_abs
                self.replays_done = 0
        self._record("pop", True)
        return word


def replay_reference(words, block_len: int, reuse: int):
    """Oracle for the FIFO's pop order: each block, in order, reuse times."""
    out = []
    for base in range(0, len(words), block_len):
        block = words[base:base + block_len]
        out.extend(block * reuse)
    return out


# ---------------------------------------------------------------------------
# elastic buffer and width adapters
# ---------------------------------------------------------------------------


class SkidBuffer:
    """Two-deep elastic stage: full throughput with a registered ready."""

    CAPACITY = 2

    def __init__(self):
        self.slots = deque()

    @property
    def can_accept(self) -> bool:
        return len(self.slots) < self.CAPACITY

    def step(self, in_valid: bool, in_word, out_ready: bool):
        """Advance one cycle; returns (in_ready, out_valid, out_word).

        All three outputs reflect the state at the start of the cycle;
        a transfer happens on a port when its valid and ready are both
        high in the same cycle.
        """
        in_ready = self.can_accept
        out_valid = bool(self.slots)
        out_word = self.slots[0] if self.slots else None
        if out_valid and out_ready:
            self.slots.popleft()
        if in_valid and in_ready:
            self.slots.append(in_word)
        return in_ready, out_valid, out_word


class WidthAdapter:
    """Concatenate `factor` narrow words into one wide word.

    The first-received word lands in the least significant bits, the
    same convention the lane packing uses.
    """

    def __init__(self, factor: int, word_bits: int):
        if factor < 1 or word_bits < 1:
            raise ConfigError("adapter factor and word width must be positive")
        self.factor = factor
        self.word_bits = word_bits
        self._held = []

    def push(self, word: int):
        """Feed one narrow word; returns the wide word when a group completes."""
        self._held.append(int(word) & ((1 << self.word_bits) - 1))
        if len(self._held) < self.factor:
            return None
        wide = 0
        for i, w in enumerate(self._held):
            wide |= w << (i * self.word_bits)
        self._held.clear()
        return wide

    def flush(self):
        """Complete a trailing partial group with zero fill."""
        if not self._held:
            return None
        while True:
            wide = self.push(0)
            if wide is not None:
                return wide


class WidthSplitter:
    """Inverse of WidthAdapter: crack one wide word into narrow words."""

    def __init__(self, factor: int, word_bits: int):
        if factor < 1 or word_bits < 1:
            raise ConfigError("splitter factor and word width must be positive")
        self.factor = factor
        self.word_bits = word_bits

    def split(self, wide: int):
        mask = (1 << self.word_bits) - 1
        return [(int(wide) >> (i * self.word_bits)) & mask for i in range(self.factor)]


# ---------------------------------------------------------------------------
# assembled hierarchy
# ---------------------------------------------------------------------------


class WeightHierarchy:
    """Off-chip tile source -> reuse FIFO -> skid buffer -> consumer.

    Words are whole weight tiles here: the physical width conversions
    (modelled separately by WidthAdapter/WidthSplitter) reorder nothing,
    so tile granularity keeps the replay semantics exact while staying
    fast.  One block is all the tiles of one output-group pass; with
    `reuse` set to the timestep count, the pop sequence is exactly the
    (t, p_i) loop order the scheduler consumes.
    """

    def __init__(self, tiles, tiles_per_block: int, reuse: int,
                 fifo_blocks: int = 2, trace=None):
        if fifo_blocks < 1:
            raise ConfigError("hierarchy needs at least one fifo block")
        self._source = iter(tiles)
        self._exhausted = False
        self._pending = None  # tile refused by a full ring last cycle
        self.fifo = PartialReuseFifo(
            fifo_blocks * tiles_per_block, tiles_per_block, reuse, trace=trace
        )
        self.skid = SkidBuffer()
        self.cycles = 0

    def _tick_push(self) -> None:
        if self._pending is None and not self._exhausted:
            try:
                self._pending = next(self._source)
            except StopIteration:
                self._exhausted = True
        if self._pending is not None and self.fifo.push(self._pending):
            self._pending = None

    @property
    def drained(self) -> bool:
        return (self._exhausted and self._pending is None
                and self.fifo.empty and not self.skid.slots)

    def next_tile(self):
        """Pull the next weight tile, advancing the pipeline cycle by cycle."""
        stall_limit = 4 * self.fifo.depth + 16
        for _ in range(stall_limit):
            self.cycles += 1
            self.fifo.tick()
            self._tick_push()
            feed = (not self.fifo.empty) and self.skid.can_accept
            word = self.fifo.pop() if feed else None
            _, out_valid, out_word = self.skid.step(feed, word, out_ready=True)
            if out_valid:
                return out_word
            if self.drained:
                raise StreamError("weight stream truncated: source ran dry")
        raise StreamError("weight stream stalled")
