"""Layer scheduling: the tiling loop nest, command stream, and executor.

The loop nest for one layer puts output groups outermost, then
timesteps, then input groups:

    for p_o:  LoadWeights(p_o)
      for t:
        for p_i:  ProcessTile(t, p_i, p_o)
        Threshold(t, p_o)        # Clear instead on the last timestep

Keeping the timestep loop inside the output-group pass is what lets
the reuse FIFO replay one group's weight block T times while the
off-chip link sends it once.  The executor here consumes the command
stream exactly the way the controller would, pulling weight tiles
through the hierarchy in replay order and batching each tile pass over
all output positions.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, StreamError
from .neuron import NeuronConfig, VmemBuffer, maxpool2
from .quantize import KIND_CONV, KIND_FC, KIND_POOL, QuantizedModel
from .spikegen import extract_windows, fc_transactions, mlp_gather
from .spikeio import SpikeTensor
from .systolic import SystolicArray
from .weights import WeightHierarchy

WINDOW_TAPS = 9  # 3x3 kernel positions per window vector


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


# ---------------------------------------------------------------------------
# layer geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerConfig:
    """Geometry of one weighted layer as the tiler sees it.

    For conv layers c_in/c_out are channel counts and (h, w) the map
    size.  For fully connected layers c_in is the flattened feature
    count and (h, w) the *incoming* map size; the input channel count
    falls out as c_in / (h * w).
    """

    kind: str
    c_in: int
    c_out: int
    h: int
    w: int
    timesteps: int
    par: int = 16  # P: channels per transaction, equals the array's M

    def __post_init__(self):
        if self.kind not in (KIND_CONV, KIND_FC):
            raise ConfigError(f"no tiling for layer kind {self.kind!r}")
        if min(self.c_in, self.c_out, self.h, self.w, self.timesteps) < 1:
            raise ConfigError("layer dims and timesteps must be positive")
        # The window vector is 9P bits and must split into 16-row chains,
        # so P itself must be a multiple of 16.
        if self.par < 16 or self.par % 16:
            raise ConfigError(f"parallelism {self.par} must be a multiple of 16")
        if self.kind == KIND_FC and self.c_in % (self.h * self.w):
            raise ConfigError(
                f"fc features {self.c_in} do not factor over a "
                f"{self.h}x{self.w} map"
            )

    # -- derived shape ----------------------------------------------------

    @property
    def array_n(self) -> int:
        return WINDOW_TAPS * self.par

    @property
    def out_h(self) -> int:
        return self.h if self.kind == KIND_CONV else 1

    @property
    def out_w(self) -> int:
        return self.w if self.kind == KIND_CONV else 1

    @property
    def positions(self) -> int:
        return self.out_h * self.out_w

    @property
    def src_channels(self) -> int:
        """Channel count of the incoming spike tensor."""
        return self.c_in if self.kind == KIND_CONV else self.c_in // (self.h * self.w)

    @property
    def transactions(self) -> int:
        """FC only: P-channel transactions streamed per timestep."""
        return self.h * self.w * _ceil_div(self.src_channels, self.par)

    @property
    def groups_in(self) -> int:
        if self.kind == KIND_CONV:
            return _ceil_div(self.c_in, self.par)
        return _ceil_div(self.transactions, WINDOW_TAPS)

    @property
    def groups_out(self) -> int:
        return _ceil_div(self.c_out, self.par)


# ---------------------------------------------------------------------------
# command stream
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoadWeights:
    group_out: int


@dataclass(frozen=True)
class ProcessTile:
    t: int
    group_in: int
    group_out: int


@dataclass(frozen=True)
class Threshold:
    t: int
    group_out: int


@dataclass(frozen=True)
class Clear:
    t: int
    group_out: int


def plan_layer(cfg: LayerConfig):
    """Emit the command stream realizing the loop nest above."""
    cmds = []
    for po in range(cfg.groups_out):
        cmds.append(LoadWeights(po))
        for t in range(cfg.timesteps):
            for pi in range(cfg.groups_in):
                cmds.append(ProcessTile(t, pi, po))
            if t == cfg.timesteps - 1:
                cmds.append(Clear(t, po))
            else:
                cmds.append(Threshold(t, po))
    return cmds


def format_commands(cmds):
    """Render a command stream as one trace line per descriptor."""
    lines = []
    for cmd in cmds:
        if isinstance(cmd, LoadWeights):
            lines.append(f"LOAD    po={cmd.group_out}")
        elif isinstance(cmd, ProcessTile):
            lines.append(f"PROC    t={cmd.t} pi={cmd.group_in} po={cmd.group_out}")
        elif isinstance(cmd, Threshold):
            lines.append(f"THRESH  t={cmd.t} po={cmd.group_out}")
        else:
            lines.append(f"CLEAR   t={cmd.t} po={cmd.group_out}")
    return lines


# ---------------------------------------------------------------------------
# weight tiling
# ---------------------------------------------------------------------------


def conv_weight_tiles(weights, cfg: LayerConfig):
    """Yield (M, N) conv tiles in (p_o, p_i) order.

    Tile element [o][(kh*3 + kw)*P + c] is W[po*P + o][pi*P + c][kh][kw],
    zero for channels past the real channel counts.
    """
    w = np.asarray(weights, dtype=np.int8)
    p = cfg.par
    padded = np.zeros((cfg.groups_out * p, cfg.groups_in * p, 3, 3), dtype=np.int8)
    padded[:cfg.c_out, :cfg.c_in] = w
    for po in range(cfg.groups_out):
        for pi in range(cfg.groups_in):
            block = padded[po * p:(po + 1) * p, pi * p:(pi + 1) * p]
            yield np.ascontiguousarray(
                block.transpose(0, 2, 3, 1).reshape(p, cfg.array_n)
            )


def fc_stream_features(cfg: LayerConfig) -> np.ndarray:
    """Map every padded stream bit to its real feature index, -1 for padding.

    Stream bit order is (group, tap, lane): bit 9P*g + P*j + l carries
    transaction 9g + j, lane l.  Real features are pixel-major, channel
    fastest, matching both the file format and the fc reference.
    """
    p = cfg.par
    per_pixel = _ceil_div(cfg.src_channels, p)
    idx = np.full(cfg.groups_in * WINDOW_TAPS * p, -1, dtype=np.int64)
    lanes = np.arange(p)
    for tau in range(cfg.transactions):
        pixel, group = divmod(tau, per_pixel)
        chans = group * p + lanes
        valid = chans < cfg.src_channels
        idx[tau * p + lanes[valid]] = pixel * cfg.src_channels + chans[valid]
    return idx


def fc_weight_tiles(weights, cfg: LayerConfig):
    """Yield (M, N) fully connected tiles in (p_o, g) order."""
    w = np.asarray(weights, dtype=np.int8)
    p = cfg.par
    padded = np.zeros((cfg.groups_out * p, cfg.c_in), dtype=np.int8)
    padded[:cfg.c_out] = w
    feat = fc_stream_features(cfg)
    for po in range(cfg.groups_out):
        rows = padded[po * p:(po + 1) * p]
        for g in range(cfg.groups_in):
            sel = feat[g * cfg.array_n:(g + 1) * cfg.array_n]
            tile = np.zeros((p, cfg.array_n), dtype=np.int8)
            real = sel >= 0
            tile[:, real] = rows[:, sel[real]]
            yield tile


def weight_tiles(weights, cfg: LayerConfig):
    if cfg.kind == KIND_CONV:
        return conv_weight_tiles(weights, cfg)
    return fc_weight_tiles(weights, cfg)


# ---------------------------------------------------------------------------
# executor
# ---------------------------------------------------------------------------


def _layer_windows(cfg: LayerConfig, x: np.ndarray):
    """Precompute the (positions, 9P) spike vectors per (t, group_in)."""
    p = cfg.par
    windows = []
    for t in range(cfg.timesteps):
        per_group = []
        if cfg.kind == KIND_CONV:
            frame = x[t].transpose(1, 2, 0)  # (H, W, C)
            pad_c = cfg.groups_in * p
            if frame.shape[2] < pad_c:
                frame = np.concatenate(
                    [frame, np.zeros(frame.shape[:2] + (pad_c - frame.shape[2],),
                                     dtype=np.uint8)], axis=2
                )
            for pi in range(cfg.groups_in):
                per_group.append(extract_windows(frame[:, :, pi * p:(pi + 1) * p]))
        else:
            vecs = mlp_gather(fc_transactions(x[t], p), p)
            if vecs.shape[0] != cfg.groups_in:
                raise StreamError("transaction stream desynchronized from plan")
            for g in range(cfg.groups_in):
                per_group.append(vecs[g].reshape(1, -1))
        windows.append(per_group)
    return windows


@dataclass
class LayerRunStats:
    commands: int = 0
    tiles: int = 0
    overflows: int = 0
    feed_cycles: int = 0
    vmem_snapshot: np.ndarray | None = None  # (c_out, positions), final timestep


def run_layer(cfg: LayerConfig, x, weights, neuron: NeuronConfig,
              pooling: bool = False, fire: bool = True, backend=None,
              fifo_trace=None):
    """Execute one weighted layer; returns (spike tensor out, stats).

    x is the (T, C, H, W) input as an ndarray or SpikeTensor.  `fire`
    False suppresses spiking on this layer (membrane readout mode); the
    final potentials then land in stats.vmem_snapshot.
    """
    data = x.data if isinstance(x, SpikeTensor) else np.asarray(x, dtype=np.uint8)
    if data.shape[0] != cfg.timesteps or data.shape[1] != cfg.src_channels \
            or data.shape[2:] != (cfg.h, cfg.w):
        raise ConfigError(
            f"input {data.shape} does not match layer "
            f"({cfg.timesteps}, {cfg.src_channels}, {cfg.h}, {cfg.w})"
        )
    if neuron.bias is not None and len(neuron.bias) != cfg.c_out:
        raise ConfigError("bias length does not match the output channel count")
    engine = backend if backend is not None else kernels.get_backend()

    m = cfg.par
    array = SystolicArray(m, cfg.array_n)
    windows = _layer_windows(cfg, data)
    hierarchy = WeightHierarchy(
        weight_tiles(weights, cfg), cfg.groups_in, cfg.timesteps, trace=fifo_trace
    )
    bias_pad = None
    if neuron.bias is not None:
        bias_pad = np.zeros(cfg.groups_out * m, dtype=np.int64)
        bias_pad[:cfg.c_out] = neuron.bias

    out = np.zeros((cfg.timesteps, cfg.c_out, cfg.out_h, cfg.out_w), dtype=np.uint8)
    stats = LayerRunStats()
    snapshot = np.zeros((cfg.groups_out * m, cfg.positions), dtype=np.int64)
    vmem = None
    for cmd in plan_layer(cfg):
        stats.commands += 1
        if isinstance(cmd, LoadWeights):
            vmem = VmemBuffer(m, cfg.positions)
        elif isinstance(cmd, ProcessTile):
            if cmd.group_in == 0 and bias_pad is not None:
                vmem.add_bias(bias_pad[cmd.group_out * m:(cmd.group_out + 1) * m])
            array.load_tile(hierarchy.next_tile(),
                            tile_id=(cmd.group_out, cmd.group_in))
            stats.tiles += 1
            psums = engine.tile_psums(windows[cmd.t][cmd.group_in],
                                      array.word_ab, array.word_c)
            vmem.accumulate(psums.T)
        else:
            last = isinstance(cmd, Clear)
            spikes = vmem.finish_timestep(neuron, last=last, fire=fire)
            po = cmd.group_out
            lanes = min(m, cfg.c_out - po * m)
            out[cmd.t, po * m:po * m + lanes] = \
                spikes[:lanes].reshape(lanes, cfg.out_h, cfg.out_w)
            if last:
                snapshot[po * m:(po + 1) * m] = vmem.last_decayed
                if np.any(vmem.v):
                    raise AssertionError("accumulators not clear after the final pass")
                stats.overflows += vmem.overflows

    if not hierarchy.drained:
        raise StreamError("weight stream desynchronized from the command stream")
    stats.feed_cycles = hierarchy.cycles
    stats.vmem_snapshot = snapshot[:cfg.c_out]

    result = SpikeTensor(out)
    if pooling:
        result = SpikeTensor(maxpool2(result.data))
    return result, stats


# ---------------------------------------------------------------------------
# whole networks
# ---------------------------------------------------------------------------


@dataclass
class NetworkResult:
    output: SpikeTensor
    scores: np.ndarray
    head: str
    layer_stats: list = field(default_factory=list)

    @property
    def overflows(self) -> int:
        return sum(s.overflows for s in self.layer_stats if s is not None)


def layer_configs(model: QuantizedModel, x: SpikeTensor, par: int = 16):
    """Walk the model against an input tensor; yields (layer, cfg or None).

    cfg is None for standalone pooling layers.  Raises ConfigError when
    the shapes do not chain.
    """
    t, c, h, w = x.data.shape
    out = []
    for layer in model.layers:
        if layer.kind == KIND_POOL:
            if h % 2 or w % 2:
                raise ConfigError(f"pooling needs even spatial dims, got {h}x{w}")
            out.append((layer, None))
            h, w = h // 2, w // 2
            continue
        if layer.kind == KIND_CONV:
            if layer.weights.shape[1] != c:
                raise ConfigError(
                    f"conv expects {layer.weights.shape[1]} input channels, map has {c}"
                )
            cfg = LayerConfig(KIND_CONV, c, layer.weights.shape[0], h, w, t, par)
        else:
            if layer.weights.shape[1] != c * h * w:
                raise ConfigError(
                    f"fc expects {layer.weights.shape[1]} features, map has {c * h * w}"
                )
            cfg = LayerConfig(KIND_FC, c * h * w, layer.weights.shape[0], h, w, t, par)
        out.append((layer, cfg))
        c, h, w = cfg.c_out, cfg.out_h, cfg.out_w
        if layer.pooling:
            if h % 2 or w % 2:
                raise ConfigError(f"pooling needs even spatial dims, got {h}x{w}")
            h, w = h // 2, w // 2
    return out


def run_network(model: QuantizedModel, x: SpikeTensor, par: int = 16,
                head: str = "spike_count", compare_ge: bool = True,
                backend=None) -> NetworkResult:
    """Run the full model through the cycle-level pipeline."""
    if head not in ("spike_count", "vmem"):
        raise ConfigError(f"unknown classification head {head!r}")
    plan = layer_configs(model, x, par)
    if head == "vmem" and (not plan or plan[-1][1] is None):
        raise ConfigError("vmem head needs a weighted final layer")

    cur = x
    result = NetworkResult(cur, np.zeros(0, dtype=np.int64), head)
    vmem_scores = None
    for i, (layer, cfg) in enumerate(plan):
        if cfg is None:
            cur = SpikeTensor(maxpool2(cur.data))
            result.layer_stats.append(None)
            continue
        readout = head == "vmem" and i == len(plan) - 1
        neuron = NeuronConfig(layer.v_th, layer.leak_shift, layer.bias, compare_ge)
        cur, stats = run_layer(cfg, cur, layer.weights, neuron,
                               pooling=layer.pooling, fire=not readout,
                               backend=backend)
        result.layer_stats.append(stats)
        if readout:
            vmem_scores = stats.vmem_snapshot.sum(axis=1)

    result.output = cur
    if head == "vmem":
        result.scores = vmem_scores
    else:
        result.scores = cur.data.sum(axis=(0, 2, 3), dtype=np.int64)
    return result
