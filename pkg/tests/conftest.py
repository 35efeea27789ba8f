"""Shared test helpers: random quantized nets and spike inputs."""

import numpy as np
import pytest

from spikesim.quantize import (KIND_CONV, KIND_FC, KIND_POOL, QuantLayer,
                               QuantizedModel)
from spikesim.spikeio import SpikeTensor


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def random_net(rng, par=None, max_layers=4, max_ch=32, max_t=4, weight_mag=128):
    """A random quantized net plus a matching random input tensor.

    Covers conv/fc/standalone-pool mixes, IF and LIF neurons, optional
    bias and fused pooling, and input densities from all-silent to
    all-firing.  weight_mag caps |w| below full INT8 when a test needs
    headroom (scale-invariance doubles the weights).
    """
    par = par if par is not None else int(rng.choice([16, 32]))
    t = int(rng.integers(1, max_t + 1))
    c0 = int(rng.integers(1, max_ch + 1))
    h0 = int(rng.choice([1, 2, 3, 4, 6, 8]))
    w0 = int(rng.choice([1, 2, 3, 4, 6, 8]))

    c, h, w = c0, h0, w0
    layers = []
    n_layers = int(rng.integers(1, max_layers + 1))
    for i in range(n_layers):
        last = i == n_layers - 1
        choices = [KIND_CONV, KIND_CONV]  # conv dominates, as in real nets
        if h % 2 == 0 and w % 2 == 0:
            choices.append(KIND_POOL)
        if last:
            choices.append(KIND_FC)
        kind = str(rng.choice(choices))

        if kind == KIND_POOL:
            layers.append(QuantLayer(KIND_POOL, None, None))
            h, w = h // 2, w // 2
            continue

        c_out = int(rng.integers(1, max_ch + 1)) if kind == KIND_CONV else \
            int(rng.integers(2, 17))
        shape = (c_out, c, 3, 3) if kind == KIND_CONV else (c_out, c * h * w)
        weights = rng.integers(-weight_mag, weight_mag, size=shape).astype(np.int8)
        bias = None
        if rng.random() < 0.3:
            bias = rng.integers(-2000, 2001, size=c_out).astype(np.int64)
        leak = int(rng.integers(1, 8)) if rng.random() < 0.5 else None
        v_th = int(rng.integers(1, 600))
        pooling = bool(kind == KIND_CONV and h % 2 == 0 and w % 2 == 0
                       and rng.random() < 0.25)
        layers.append(QuantLayer(kind, weights, bias, v_th, leak, pooling))
        if kind == KIND_FC:
            c, h, w = c_out, 1, 1
        else:
            c = c_out
            if pooling:
                h, w = h // 2, w // 2

    density = float(rng.choice([0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0]))
    x = SpikeTensor.random(t, c0, h0, w0, density, rng)
    return QuantizedModel(layers), x, par
