"""Bit-accurate, cycle-approximate simulator for a spiking CNN
accelerator built from cascaded SIMD multiplier slices.

The package splits into a cycle-level pipeline (dsp, systolic,
spikegen, weights, neuron, scheduler, kernels), an independent integer
reference (golden), a float-to-INT8 conversion front end (quantize),
an analytical performance model (perf), and file formats plus CLI
(spikeio, cli).
"""

from .errors import (BadMagicError, ConfigError, DataFormatError,
                     DimOverflowError, PayloadSizeError, QuantizationError,
                     SimError, StreamError)
from .golden import run_golden
from .quantize import (FloatLayer, QuantizedModel, QuantLayer, load_model,
                       quantize_layer, quantize_model, save_model)
from .scheduler import LayerConfig, plan_layer, run_layer, run_network
from .spikeio import SpikeTensor

__version__ = "0.1.0"

__all__ = [
    "BadMagicError", "ConfigError", "DataFormatError", "DimOverflowError",
    "FloatLayer", "LayerConfig", "PayloadSizeError", "QuantLayer",
    "QuantizationError", "QuantizedModel", "SimError", "SpikeTensor",
    "StreamError", "load_model", "plan_layer", "quantize_layer",
    "quantize_model", "run_golden", "run_layer", "run_network", "save_model",
    "__version__",
]
