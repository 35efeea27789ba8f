"""Reuse FIFO, skid buffer, and width adapters against replay oracles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikesim.errors import ConfigError, StreamError
from spikesim.weights import (PartialReuseFifo, SkidBuffer, WeightHierarchy,
                              WidthAdapter, WidthSplitter, replay_reference)

# ---------------------------------------------------------------------------
# partial-reuse FIFO
# ---------------------------------------------------------------------------


def drain(fifo, words, budget=100000):
    """Push words as accepted, pop whenever possible; returns the pop order."""
    pending = list(words)
    popped = []
    for _ in range(budget):
        if pending and fifo.push(pending[0]):
            pending.pop(0)
        w = fifo.pop()
        if w is not None:
            popped.append(w)
        if not pending and fifo.empty:
            break
    return popped


def test_two_blocks_replayed_three_times():
    fifo = PartialReuseFifo(depth=8, block_len=2, reuse=3)
    got = drain(fifo, ["a0", "a1", "b0", "b1"])
    assert got == ["a0", "a1"] * 3 + ["b0", "b1"] * 3


def test_push_refused_while_block_protected():
    fifo = PartialReuseFifo(depth=4, block_len=2, reuse=2)
    for w in range(4):
        assert fifo.push(w)
    assert not fifo.push(99)  # ring full, block 0 still live
    assert fifo.full
    # retire block 0: two passes of two words
    assert [fifo.pop() for _ in range(4)] == [0, 1, 0, 1]
    assert fifo.push(99)      # start advanced, one block of room again
    assert fifo.push(100)
    assert [fifo.pop() for _ in range(4)] == [2, 3, 2, 3]
    assert [fifo.pop() for _ in range(4)] == [99, 100, 99, 100]


def test_pop_on_incomplete_block_returns_none():
    fifo = PartialReuseFifo(depth=4, block_len=3, reuse=1)
    assert fifo.pop() is None
    fifo.push("x")
    fifo.push("y")
    assert fifo.empty and fifo.pop() is None
    fifo.push("z")
    assert not fifo.empty
    assert [fifo.pop() for _ in range(3)] == ["x", "y", "z"]


def test_reuse_one_degenerates_to_plain_fifo():
    fifo = PartialReuseFifo(depth=3, block_len=1, reuse=1)
    assert drain(fifo, list(range(7))) == list(range(7))


def test_fifo_config_validation():
    with pytest.raises(ConfigError):
        PartialReuseFifo(0, 1, 1)
    with pytest.raises(ConfigError):
        PartialReuseFifo(4, 5, 1)
    with pytest.raises(ConfigError):
        PartialReuseFifo(4, 2, 0)


def test_fifo_random_traces_match_replay_reference(rng):
    for _ in range(200):
        block = int(rng.integers(1, 6))
        blocks = int(rng.integers(1, 6))
        depth = block * int(rng.integers(1, 4)) + int(rng.integers(0, 3))
        if depth < block:
            depth = block
        reuse = int(rng.integers(1, 5))
        words = list(rng.integers(0, 10 ** 6, size=block * blocks))
        fifo = PartialReuseFifo(depth, block, reuse)
        assert drain(fifo, words) == replay_reference(words, block, reuse)


def test_fifo_trace_records_pointers():
    trace = []
    fifo = PartialReuseFifo(4, 2, 2, trace=trace)
    fifo.tick()
    fifo.push("a")
    fifo.tick()
    fifo.push("b")
    fifo.tick()
    fifo.pop()
    assert [e["op"] for e in trace] == ["push", "push", "pop"]
    assert trace[-1]["cycle"] == 3
    assert trace[-1]["pop"] == 1
    assert all(e["accepted"] for e in trace)


# ---------------------------------------------------------------------------
# skid buffer
# ---------------------------------------------------------------------------


@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=200))
def test_skid_buffer_never_loses_or_reorders(schedule):
    skid = SkidBuffer()
    sent, received = [], []
    counter = 0
    for in_valid, out_ready in schedule:
        in_ready, out_valid, out_word = skid.step(in_valid, counter, out_ready)
        assert len(skid.slots) <= SkidBuffer.CAPACITY
        if in_valid and in_ready:
            sent.append(counter)
            counter += 1
        if out_valid and out_ready:
            received.append(out_word)
    # everything received was sent, in order, with nothing duplicated
    assert received == sent[:len(received)]
    assert len(sent) - len(received) <= SkidBuffer.CAPACITY


def test_skid_buffer_full_throughput():
    skid = SkidBuffer()
    out = []
    for i in range(10):
        _, out_valid, word = skid.step(True, i, True)
        if out_valid:
            out.append(word)
    assert out == list(range(9))  # one cycle of latency, then every cycle


# ---------------------------------------------------------------------------
# width adapters
# ---------------------------------------------------------------------------


def test_width_adapter_first_word_least_significant():
    ad = WidthAdapter(4, 12)
    assert ad.push(1) is None
    assert ad.push(2) is None
    assert ad.push(3) is None
    assert ad.push(4) == 0x004003002001


def test_width_adapter_splitter_identity(rng):
    for _ in range(50):
        factor = int(rng.integers(1, 6))
        bits = int(rng.integers(4, 17))
        ad = WidthAdapter(factor, bits)
        sp = WidthSplitter(factor, bits)
        words = [int(w) for w in rng.integers(0, 1 << bits, size=factor * 5)]
        wides = [w for w in (ad.push(x) for x in words) if w is not None]
        back = [w for wide in wides for w in sp.split(wide)]
        assert back == words


def test_width_adapter_flush_pads_with_zeros():
    ad = WidthAdapter(3, 8)
    ad.push(0xAA)
    assert ad.flush() == 0xAA
    assert ad.flush() is None


# ---------------------------------------------------------------------------
# assembled hierarchy
# ---------------------------------------------------------------------------


def test_hierarchy_delivers_replay_order():
    tiles = [f"t{b}{i}" for b in range(3) for i in range(2)]
    h = WeightHierarchy(iter(tiles), tiles_per_block=2, reuse=3)
    got = [h.next_tile() for _ in range(3 * 2 * 3)]
    assert got == replay_reference(tiles, 2, 3)
    assert h.drained
    assert h.cycles > 0


def test_hierarchy_reports_truncated_stream():
    h = WeightHierarchy(iter(["only"]), tiles_per_block=2, reuse=1)
    with pytest.raises(StreamError):
        h.next_tile()


def test_hierarchy_overconsumption_raises():
    h = WeightHierarchy(iter(["a", "b"]), tiles_per_block=2, reuse=1)
    assert [h.next_tile(), h.next_tile()] == ["a", "b"]
    with pytest.raises(StreamError):
        h.next_tile()
