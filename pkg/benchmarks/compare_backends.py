"""Benchmark the jitted kernels against the pure-numpy fallback.

Times tile_psums, the hot inner product of the whole simulator, over a
few array geometries and spike batch sizes.  Results from the two
backends are asserted bit-identical before any number is reported.
"""

import argparse
import time

import numpy as np

from spikesim import kernels
from spikesim.systolic import SystolicArray


def bench_one(engine, vectors, word_ab, word_c, repeats: int) -> float:
    engine.tile_psums(vectors, word_ab, word_c)  # warmup / jit compile
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        engine.tile_psums(vectors, word_ab, word_c)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=4096,
                        help="spike vectors per call (default 4096)")
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repeats, best-of (default 7)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1

    rng = np.random.default_rng(args.seed)
    numpy_eng = kernels.get_backend("numpy")
    numba_eng = kernels.get_backend("numba")

    print(f"tile_psums, batch={args.batch}, best of {args.repeats}")
    print(f"{'array':>9} {'numpy ms':>10} {'numba ms':>10} {'speedup':>9}")
    for m, n in ((16, 144), (32, 288)):
        array = SystolicArray(m, n)
        array.load_tile(rng.integers(-128, 128, (m, n), dtype=np.int8))
        vectors = (rng.random((args.batch, n)) < 0.3).astype(np.uint8)

        a = numpy_eng.tile_psums(vectors, array.word_ab, array.word_c)
        b = numba_eng.tile_psums(vectors, array.word_ab, array.word_c)
        assert np.array_equal(a, b), "backends disagree, benchmark void"

        t_np = bench_one(numpy_eng, vectors, array.word_ab, array.word_c,
                         args.repeats)
        t_nb = bench_one(numba_eng, vectors, array.word_ab, array.word_c,
                         args.repeats)
        print(f"{m:>5}x{n:<3} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} "
              f"{t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
