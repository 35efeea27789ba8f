"""Fixed-point word formats and packed-lane arithmetic.

Everything the accelerator computes lives in one of three integer
formats:

* INT8 weights, as stored in the model file.
* INT12 lanes, four of which share one 48-bit word.  These are the
  partial sums travelling down a cascade of multiplier slices.
* INT24 accumulators holding membrane potentials.

The 48-bit adder is modelled exactly as the slice SIMD mode provides
it in silicon: four independent 12-bit two's-complement adds with no
carry propagation between lanes.
"""

INT8_MIN, INT8_MAX = -128, 127

LANE_BITS = 12
LANE_MIN, LANE_MAX = -(1 << 11), (1 << 11) - 1
LANE_MASK = (1 << LANE_BITS) - 1

WORD_LANES = 4
WORD_BITS = LANE_BITS * WORD_LANES
WORD_MASK = (1 << WORD_BITS) - 1

ACC_BITS = 24
ACC_MIN, ACC_MAX = -(1 << 23), (1 << 23) - 1

THRESH_BITS = 18
THRESH_MIN, THRESH_MAX = -(1 << 17), (1 << 17) - 1

# SWAR masks over the four lanes: the low 11 bits of each lane, and
# each lane's sign bit.  Adding the low parts separately and patching
# the sign bits back in with XOR keeps lane carries from leaking into
# the neighbour lane.
MASK_LOW11 = 0x7FF7FF7FF7FF
MASK_MSB = 0x800800800800


def wrap12(v):
    """Wrap an integer into INT12 two's-complement range."""
    return ((v + (1 << 11)) & LANE_MASK) - (1 << 11)


def wrap24(v):
    """Wrap an integer (or integer ndarray) into INT24 range."""
    return ((v + (1 << 23)) & ((1 << ACC_BITS) - 1)) - (1 << 23)


def sext(value: int, width: int) -> int:
    """Sign-extend the low `width` bits of `value`.

    Accepts either a raw bit field or an already-signed value; only the
    low `width` bits matter.  Widths above the accumulator width are a
    programming error.
    """
    if not 1 <= width <= ACC_BITS:
        raise ValueError(f"width {width} outside 1..{ACC_BITS}")
    bits = value & ((1 << width) - 1)
    if bits & (1 << (width - 1)):
        bits -= 1 << width
    return bits


def pack_lanes(values) -> int:
    """Pack four signed lane values into a 48-bit word, lane 0 in bits 11..0.

    Values are masked to 12 bits; use pack4 for range-checked weight
    packing.
    """
    word = 0
    for i, v in enumerate(values):
        word |= (int(v) & LANE_MASK) << (LANE_BITS * i)
    return word


def pack4(w0: int, w1: int, w2: int, w3: int) -> int:
    """Pack four INT8 weights into one 48-bit word."""
    for i, w in enumerate((w0, w1, w2, w3)):
        if not INT8_MIN <= w <= INT8_MAX:
            raise ValueError(f"lane {i} weight {w} outside INT8")
    return pack_lanes((w0, w1, w2, w3))


def unpack4(word: int):
    """Inverse of pack_lanes/pack4: the four signed lane values."""
    return tuple(sext(word >> (LANE_BITS * i), LANE_BITS) for i in range(WORD_LANES))


def simd_add12(a: int, b: int) -> int:
    """Add two packed words as four independent 12-bit adders.

    Carries do not cross lane boundaries; each lane wraps like a
    two's-complement INT12.
    """
    return ((a & MASK_LOW11) + (b & MASK_LOW11)) ^ ((a ^ b) & MASK_MSB)
