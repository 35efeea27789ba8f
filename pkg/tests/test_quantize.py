"""Quantization front end: scaling, rounding, fusion, and the model format."""

import numpy as np
import pytest

from spikesim.errors import ConfigError, DataFormatError, QuantizationError
from spikesim.quantize import (BatchNorm, FloatLayer, fuse_batchnorm,
                               leak_to_shift, load_model, quantize_layer,
                               quantize_model, save_model)

# ---------------------------------------------------------------------------
# weight and threshold scaling
# ---------------------------------------------------------------------------


def test_frozen_scale_example():
    # max|w| = 0.5 gives s = 254; 0.25 maps to 63.5 and rounds half-even to 64
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 0, 0] = 0.5
    w[0, 0, 1, 1] = 0.25
    q = quantize_layer(FloatLayer("conv3x3", w, v_th=1.0))
    assert q.scale == 254.0
    assert q.weights[0, 0, 0, 0] == 127
    assert q.weights[0, 0, 1, 1] == 64
    assert q.v_th == 254


def test_round_half_to_even():
    w = np.array([[1.0, 0.5, 64.5 / 127.0]])
    q = quantize_layer(FloatLayer("fully_connected", w))
    assert q.weights[0, 0] == 127
    assert q.weights[0, 1] == 64   # 63.5 rounds up to even
    assert q.weights[0, 2] == 64   # 64.5 rounds down to even


def test_negative_extreme_maps_to_minus_127():
    w = np.array([[1.0, -1.0]])
    q = quantize_layer(FloatLayer("fully_connected", w))
    assert q.weights[0, 1] == -127


def test_all_zero_weights_use_unit_scale():
    q = quantize_layer(FloatLayer("fully_connected", np.zeros((2, 4)), v_th=3.0))
    assert q.scale == 1.0
    assert np.all(q.weights == 0)
    assert q.v_th == 3


def test_threshold_overflow_raises():
    w = np.array([[0.001]])  # s = 127000
    with pytest.raises(QuantizationError):
        quantize_layer(FloatLayer("fully_connected", w, v_th=10.0))


def test_bias_scales_with_weights():
    w = np.array([[1.0]])
    q = quantize_layer(FloatLayer("fully_connected", w, bias=np.array([0.5])))
    assert q.bias[0] == 64  # 0.5 * 127 = 63.5, half-even up


# ---------------------------------------------------------------------------
# leak snapping
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("frac,shift", [
    (0.5, 1), (0.25, 2), (0.3, 2), (0.04, 5), (0.6, 1), (0.9, 1),
    (2 ** -23, 23), (2 ** -25, 23),
])
def test_leak_to_shift(frac, shift):
    assert leak_to_shift(frac) == shift


def test_leak_fraction_bounds():
    with pytest.raises(ConfigError):
        leak_to_shift(0.0)
    with pytest.raises(ConfigError):
        leak_to_shift(1.0)
    with pytest.raises(ConfigError):
        FloatLayer("conv3x3", np.zeros((1, 1, 3, 3)), leak=1.5)


# ---------------------------------------------------------------------------
# batchnorm fusion
# ---------------------------------------------------------------------------


def test_fusion_matches_float_composition(rng):
    c_out, c_in = 5, 3
    layer = FloatLayer(
        "conv3x3", rng.normal(size=(c_out, c_in, 3, 3)),
        bias=rng.normal(size=c_out),
        bn=BatchNorm(rng.uniform(0.5, 2.0, c_out), rng.normal(size=c_out),
                     rng.normal(size=c_out), rng.uniform(0.1, 2.0, c_out)),
    )
    fused = fuse_batchnorm(layer)
    assert fused.bn is None

    x = rng.normal(size=(c_in, 3, 3))
    for o in range(c_out):
        raw = float(np.sum(layer.weights[o] * x)) + layer.bias[o]
        bn = layer.bn
        expect = (raw - bn.mean[o]) / np.sqrt(bn.var[o] + bn.eps) * bn.gamma[o] \
            + bn.beta[o]
        got = float(np.sum(fused.weights[o] * x)) + fused.bias[o]
        assert got == pytest.approx(expect, rel=1e-9)


def test_fusion_without_bias(rng):
    layer = FloatLayer(
        "conv3x3", rng.normal(size=(2, 1, 3, 3)),
        bn=BatchNorm(np.ones(2), np.zeros(2), np.full(2, 0.5), np.ones(2), eps=0.0),
    )
    fused = fuse_batchnorm(layer)
    assert fused.bias == pytest.approx([-0.5, -0.5])


# ---------------------------------------------------------------------------
# model round trip
# ---------------------------------------------------------------------------


def small_model(rng):
    return quantize_model([
        FloatLayer("conv3x3", rng.normal(size=(4, 2, 3, 3)),
                   bias=rng.normal(size=4), v_th=1.5, leak=0.25, pooling=True),
        FloatLayer("maxpool2"),
        FloatLayer("fully_connected", rng.normal(size=(3, 4)), v_th=0.9),
    ])


def test_model_save_load_roundtrip(tmp_path, rng):
    model = small_model(rng)
    path = tmp_path / "net.json"
    save_model(model, path)
    back = load_model(path)
    assert len(back.layers) == len(model.layers)
    for a, b in zip(model.layers, back.layers):
        assert a.kind == b.kind
        assert a.v_th == b.v_th
        assert a.leak_shift == b.leak_shift
        assert a.pooling == b.pooling
        if a.weights is None:
            assert b.weights is None
        else:
            assert np.array_equal(a.weights, b.weights)
        if a.bias is None:
            assert b.bias is None
        else:
            assert np.array_equal(a.bias, b.bias)


def test_load_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(DataFormatError):
        load_model(path)


def test_load_rejects_bad_kind(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"layers": [{"kind": "deconv"}]}')
    with pytest.raises(DataFormatError):
        load_model(path)


def test_load_rejects_short_weight_file(tmp_path, rng):
    model = small_model(rng)
    path = tmp_path / "net.json"
    save_model(model, path)
    wfile = tmp_path / "net_l0.w8"
    wfile.write_bytes(wfile.read_bytes()[:-4])
    with pytest.raises(DataFormatError):
        load_model(path)


def test_load_rejects_missing_weight_file(tmp_path, rng):
    model = small_model(rng)
    path = tmp_path / "net.json"
    save_model(model, path)
    (tmp_path / "net_l0.w8").unlink()
    with pytest.raises(OSError):
        load_model(path)
