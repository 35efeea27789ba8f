"""Command line front end.

Exit codes: 0 success (and "equal" for compare), 1 tensor mismatch,
2 usage, 3 file I/O or parse failure, 4 configuration rejected.
"""

import argparse
import json
import sys

import numpy as np

from . import golden as golden_mod
from . import kernels, perf
from .errors import ConfigError, DataFormatError, QuantizationError, StreamError
from .quantize import KIND_POOL, QuantizedModel, load_model
from .scheduler import LayerConfig, format_commands, layer_configs, plan_layer, \
    run_layer, run_network
from .neuron import NeuronConfig
from .spikeio import SpikeTensor

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONFIG = 4


def _array_spec(text: str):
    """Parse an MxN geometry argument."""
    try:
        m, n = text.lower().split("x")
        return int(m), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MxN, got {text!r}") from None


def _write_scores(scores, path):
    doc = {"scores": [int(s) for s in scores],
           "argmax": int(np.argmax(scores)) if len(scores) else None}
    if path:
        with open(path, "w") as f:
            json.dump(doc, f)
            f.write("\n")
    return doc


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    m, n = args.array
    if n != 9 * m:
        raise ConfigError(f"array {m}x{n} unsupported: N must equal 9*M")
    model = load_model(args.model)
    x = SpikeTensor.load(args.input)
    backend = kernels.get_backend(args.backend)
    result = run_network(model, x, par=m, head=args.head,
                         compare_ge=not args.strict_threshold, backend=backend)
    if args.out:
        result.output.save(args.out)
    doc = _write_scores(result.scores, args.scores)
    if args.perf:
        cfg = perf.PerfConfig(args.freq_mhz * 1e6, m, n)
        report = perf.network_cycles(model, (x.c, x.h, x.w), x.t, cfg)
        with open(args.perf, "w") as f:
            f.write(report.to_json())
            f.write("\n")
    shape = result.output.data.shape
    print(f"ran {len(model.layers)} layers on backend {backend.NAME}: "
          f"output {shape[0]}x{shape[1]}x{shape[2]}x{shape[3]}, "
          f"{int(result.output.data.sum())} spikes, argmax {doc['argmax']}")
    return EXIT_OK


def cmd_golden(args) -> int:
    model = load_model(args.model)
    x = SpikeTensor.load(args.input)
    result = golden_mod.run_golden(model, x, head=args.head,
                                   compare_ge=not args.strict_threshold)
    if args.out:
        result.output.save(args.out)
    doc = _write_scores(result.scores, args.scores)
    shape = result.output.data.shape
    print(f"golden {len(model.layers)} layers: "
          f"output {shape[0]}x{shape[1]}x{shape[2]}x{shape[3]}, "
          f"{int(result.output.data.sum())} spikes, argmax {doc['argmax']}, "
          f"{result.sops} SOPs")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = SpikeTensor.load(args.a)
    b = SpikeTensor.load(args.b)
    if a.data.shape != b.data.shape:
        print(f"shape mismatch: {a.data.shape} vs {b.data.shape}")
        return EXIT_MISMATCH
    diff = np.nonzero(a.data != b.data)
    if diff[0].size == 0:
        print(f"equal: {a.data.shape[0]}x{a.data.shape[1]}"
              f"x{a.data.shape[2]}x{a.data.shape[3]}, "
              f"{int(a.data.sum())} spikes")
        return EXIT_OK
    t, c, y, x = (int(d[0]) for d in diff)
    print(f"first divergence at t={t} c={c} y={y} x={x}: "
          f"{int(a.data[t, c, y, x])} != {int(b.data[t, c, y, x])}")
    return EXIT_MISMATCH


def cmd_bench(args) -> int:
    freq = args.freq_mhz * 1e6
    print(f"{'array':>8} {'peak GSOP/s':>12} {'ideal ms':>10} "
          f"{'modeled ms':>11} {'GSOP/s':>9} {'util':>7}")
    for m, n in ((16, 144), (32, 288)):
        ideal = perf.network_cycles_from_dims(
            perf.MNIST5_DIMS, args.timesteps, perf.PerfConfig.ideal(freq, m, n))
        modeled = perf.network_cycles_from_dims(
            perf.MNIST5_DIMS, args.timesteps, perf.PerfConfig(freq, m, n))
        print(f"{m:>4}x{n:<3} {modeled.peak_gsops:>12.1f} "
              f"{ideal.seconds * 1e3:>10.4f} {modeled.seconds * 1e3:>11.4f} "
              f"{modeled.actual_gsops:>9.1f} {modeled.utilization:>6.1%}")
    return EXIT_OK


def cmd_dump_trace(args) -> int:
    model = load_model(args.model)
    if not 0 <= args.layer < len(model.layers):
        raise ConfigError(f"layer index {args.layer} outside the model")
    if model.layers[args.layer].kind == KIND_POOL:
        raise ConfigError("pooling layers have no command stream")
    x = SpikeTensor.load(args.input)
    m = args.par
    plan = layer_configs(model, x, m)
    layer, cfg = plan[args.layer]
    lines = format_commands(plan_layer(cfg))
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for line in lines:
            print(line, file=out)
    finally:
        if args.out:
            out.close()

    if args.fifo_trace:
        # recreate the layer's input by running the prefix through the
        # reference model, then execute just this layer with tracing on
        prefix = QuantizedModel(model.layers[:args.layer])
        cur = golden_mod.run_golden(prefix, x).output if prefix.layers else x
        trace = []
        neuron = NeuronConfig(layer.v_th, layer.leak_shift, layer.bias)
        run_layer(cfg, cur, layer.weights, neuron, pooling=layer.pooling,
                  fifo_trace=trace)
        with open(args.fifo_trace, "w") as f:
            for e in trace:
                f.write(f"cycle={e['cycle']} op={e['op']} "
                        f"accepted={int(e['accepted'])} push={e['push']} "
                        f"pop={e['pop']} start={e['start']} "
                        f"replays={e['replays']}\n")
        print(f"wrote {len(trace)} fifo events to {args.fifo_trace}",
              file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikesim",
        description="bit-accurate simulator for a spiking CNN accelerator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, with_out=True):
        p.add_argument("--model", required=True, help="model JSON index")
        p.add_argument("--input", required=True, help="input spike tensor file")
        if with_out:
            p.add_argument("--out", help="write the output spike tensor here")
            p.add_argument("--scores", help="write classifier scores JSON here")
            p.add_argument("--head", choices=("spike_count", "vmem"),
                           default="spike_count")
            p.add_argument("--strict-threshold", action="store_true",
                           help="fire on v > v_th instead of v >= v_th")

    p = sub.add_parser("run", help="run the cycle-level simulator")
    add_io(p)
    p.add_argument("--array", type=_array_spec, default=(16, 144),
                   metavar="MxN", help="array geometry (default 16x144)")
    p.add_argument("--freq-mhz", type=float, default=300.0)
    p.add_argument("--perf", help="write a performance report JSON here")
    p.add_argument("--backend", choices=kernels.BACKEND_NAMES,
                   help="kernel backend (default: env or auto)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("golden", help="run the reference model")
    add_io(p)
    p.set_defaults(func=cmd_golden)

    p = sub.add_parser("compare", help="compare two spike tensor files")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="peak and modeled throughput table")
    p.add_argument("--freq-mhz", type=float, default=300.0)
    p.add_argument("--timesteps", type=int, default=perf.MNIST5_TIMESTEPS)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dump-trace", help="dump a layer's command stream")
    add_io(p, with_out=False)
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--par", type=int, default=16,
                   help="channel parallelism P (array M)")
    p.add_argument("--out", help="write command lines here instead of stdout")
    p.add_argument("--fifo-trace", help="also run the layer, dumping fifo events")
    p.set_defaults(func=cmd_dump_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, QuantizationError, StreamError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


def run_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run_main()
