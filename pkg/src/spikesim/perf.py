"""Analytical throughput and latency model.

Counts are architectural, not measured.  Compute cycles fall straight
out of the tiling loop nest: one cycle per output position per tile
pass, so a layer costs groups_out * T * groups_in * positions cycles
on an ideal pipeline.  Overheads (pipeline fill, tile switching,
command decode, off-chip weight bandwidth) are parameters, letting the
same model describe both the ideal bound and a realistic controller.
"""

import json
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .quantize import KIND_CONV, KIND_FC, KIND_POOL, QuantizedModel
from .scheduler import LayerConfig, layer_configs
from .spikeio import SpikeTensor

DEFAULT_FREQ_HZ = 300e6


@dataclass(frozen=True)
class PerfConfig:
    """Array geometry, clock, and overhead knobs."""

    freq_hz: float = DEFAULT_FREQ_HZ
    m: int = 16
    n: int = 144
    tile_switch_cycles: int = 3    # drain/refill bubble between input-group tiles
    pipeline_fill_cycles: int = 24  # slice cascade (16) + column tree + update pipe
    cmd_overhead_cycles: int = 2   # per descriptor fetch/decode
    weight_words_per_cycle: float | None = 16.0  # off-chip INT8 weights per cycle

    def __post_init__(self):
        if self.freq_hz <= 0 or self.m < 4 or self.n < 16:
            raise ConfigError("implausible performance configuration")

    @classmethod
    def ideal(cls, freq_hz: float = DEFAULT_FREQ_HZ, m: int = 16,
              n: int = 144) -> "PerfConfig":
        """Zero-overhead pipeline: the architectural lower bound."""
        return cls(freq_hz, m, n, 0, 0, 0, None)


def peak_sops(freq_hz: float, m: int, n: int) -> int:
    """Peak synaptic operations per second: 2 ops per cell per cycle."""
    return int(round(2 * freq_hz * m * n))


def peak_gsops(freq_hz: float, m: int, n: int) -> float:
    return 2 * freq_hz * m * n / 1e9


# ---------------------------------------------------------------------------
# per-layer cycle model
# ---------------------------------------------------------------------------


@dataclass
class LayerCycles:
    label: str
    compute: int = 0
    fill: int = 0
    switch: int = 0
    cmd: int = 0
    weight_stream: int = 0  # cycles the off-chip link needs; a bound, not a term
    total: int = 0
    sops_dense: int = 0   # real synaptic work (unpadded channels)
    sops_padded: int = 0  # what the array actually clocks through


def layer_cycles(cfg: LayerConfig, perf: PerfConfig, label: str = "") -> LayerCycles:
    """Cycle cost of one weighted layer under a PerfConfig."""
    if cfg.par != perf.m or cfg.array_n != perf.n:
        raise ConfigError(
            f"layer tiled for {cfg.par}x{cfg.array_n}, array is {perf.m}x{perf.n}"
        )
    c_o, c_i, t = cfg.groups_out, cfg.groups_in, cfg.timesteps
    compute = c_o * t * c_i * cfg.positions
    fill = perf.pipeline_fill_cycles * c_o * t
    switch = perf.tile_switch_cycles * c_o * t * max(c_i - 1, 0)
    n_cmds = c_o * (1 + t * (c_i + 1))
    cmd = perf.cmd_overhead_cycles * n_cmds

    weight_words = c_o * c_i * perf.m * perf.n  # each tile crosses the link once
    stream = 0
    if perf.weight_words_per_cycle:
        stream = -(-weight_words // int(perf.weight_words_per_cycle))

    total = max(compute + fill + switch, stream) + cmd
    if cfg.kind == KIND_CONV:
        dense = 2 * t * cfg.positions * 9 * cfg.c_in * cfg.c_out
    else:
        dense = 2 * t * cfg.c_in * cfg.c_out
    return LayerCycles(
        label or cfg.kind, compute, fill, switch, cmd, stream, total,
        dense, 2 * perf.m * perf.n * compute,
    )


# ---------------------------------------------------------------------------
# whole networks
# ---------------------------------------------------------------------------


@dataclass
class PerfReport:
    perf: PerfConfig
    layers: list = field(default_factory=list)

    @property
    def total_cycles(self) -> int:
        return sum(l.total for l in self.layers)

    @property
    def seconds(self) -> float:
        return self.total_cycles / self.perf.freq_hz

    @property
    def sops_dense(self) -> int:
        return sum(l.sops_dense for l in self.layers)

    @property
    def sops_padded(self) -> int:
        return sum(l.sops_padded for l in self.layers)

    @property
    def peak_gsops(self) -> float:
        return peak_gsops(self.perf.freq_hz, self.perf.m, self.perf.n)

    @property
    def actual_gsops(self) -> float:
        return self.sops_dense / self.seconds / 1e9 if self.total_cycles else 0.0

    @property
    def utilization(self) -> float:
        return self.actual_gsops / self.peak_gsops if self.total_cycles else 0.0

    def to_json(self) -> str:
        doc = {
            "config": asdict(self.perf),
            "layers": [asdict(l) for l in self.layers],
            "total_cycles": self.total_cycles,
            "latency_ms": self.seconds * 1e3,
            "peak_gsops": self.peak_gsops,
            "actual_gsops": self.actual_gsops,
            "utilization": self.utilization,
        }
        return json.dumps(doc, indent=1)

    def to_text(self) -> str:
        lines = [
            f"array {self.perf.m}x{self.perf.n} @ {self.perf.freq_hz / 1e6:g} MHz",
            f"{'layer':<18}{'compute':>10}{'fill':>7}{'switch':>8}"
            f"{'cmd':>7}{'stream':>9}{'total':>10}",
        ]
        for l in self.layers:
            lines.append(
                f"{l.label:<18}{l.compute:>10}{l.fill:>7}{l.switch:>8}"
                f"{l.cmd:>7}{l.weight_stream:>9}{l.total:>10}"
            )
        lines.append(f"total cycles      {self.total_cycles}")
        lines.append(f"latency           {self.seconds * 1e3:.4f} ms")
        lines.append(f"peak              {self.peak_gsops:.1f} GSOP/s")
        lines.append(f"actual            {self.actual_gsops:.1f} GSOP/s "
                     f"({self.utilization:.1%} utilization)")
        return "\n".join(lines)


def network_cycles_from_dims(layer_dims, timesteps: int,
                             perf: PerfConfig) -> PerfReport:
    """Cycle model from bare layer geometry.

    layer_dims: iterable of (kind, c_in, c_out, h, w) tuples with conv
    entries carrying channel counts and fc entries flattened features
    over the incoming (h, w) map.  Pooling is dimension bookkeeping
    done by the caller, so it never appears here.
    """
    report = PerfReport(perf)
    for i, (kind, c_in, c_out, h, w) in enumerate(layer_dims):
        cfg = LayerConfig(kind, c_in, c_out, h, w, timesteps, perf.m)
        report.layers.append(layer_cycles(cfg, perf, label=f"{i}:{kind}"))
    return report


def network_cycles(model: QuantizedModel, input_shape, timesteps: int,
                   perf: PerfConfig) -> PerfReport:
    """Cycle model for a concrete quantized model and input shape."""
    c, h, w = input_shape
    probe = SpikeTensor.zeros(timesteps, c, h, w)
    report = PerfReport(perf)
    for i, (layer, cfg) in enumerate(layer_configs(model, probe, perf.m)):
        if cfg is None:
            report.layers.append(LayerCycles(label=f"{i}:{KIND_POOL}"))
            continue
        report.layers.append(layer_cycles(cfg, perf, label=f"{i}:{layer.kind}"))
    return report


# Five conv stages and a classifier head on a 28x28 single-channel map,
# the standard small-MNIST benchmark topology for this architecture.
# Pool steps after stages 2 and 3 are already folded into the dims.
MNIST5_DIMS = (
    (KIND_CONV, 1, 16, 28, 28),
    (KIND_CONV, 16, 64, 28, 28),
    (KIND_CONV, 64, 128, 14, 14),
    (KIND_CONV, 128, 256, 7, 7),
    (KIND_CONV, 256, 256, 7, 7),
    (KIND_FC, 12544, 10, 7, 7),
)
MNIST5_TIMESTEPS = 4
