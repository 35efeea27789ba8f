"""Generate the checked-in demo model and input tensor.

The net is deliberately tiny but exercises every moving part: a LIF
conv stage with bias and fused pooling, an IF conv stage, and a
fully connected classifier head.  Deterministic by seed, so rerunning
this script reproduces the exact same files.
"""

import argparse
import os

import numpy as np

from spikesim.quantize import FloatLayer, quantize_model, save_model
from spikesim.spikeio import SpikeTensor


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out-dir", default=os.path.dirname(__file__) or ".")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    model = quantize_model([
        FloatLayer("conv3x3", rng.normal(size=(16, 1, 3, 3)),
                   bias=rng.normal(size=16) * 0.05, v_th=1.2, leak=0.5,
                   pooling=True),
        FloatLayer("conv3x3", rng.normal(size=(16, 16, 3, 3)) * 0.4, v_th=1.5),
        FloatLayer("fully_connected", rng.normal(size=(10, 256)) * 0.3,
                   v_th=2.0),
    ])
    model_path = os.path.join(args.out_dir, "model.json")
    save_model(model, model_path)

    x = SpikeTensor.random(2, 1, 8, 8, density=0.5, rng=rng)
    input_path = os.path.join(args.out_dir, "input.spk")
    x.save(input_path)

    print(f"wrote {model_path} (+ per-layer .w8 weight files)")
    print(f"wrote {input_path}: T=2 C=1 8x8, {int(x.data.sum())} spikes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
