"""Exception types shared across the package.

The CLI maps these onto process exit codes, so new failure modes should
subclass one of the categories below instead of raising bare Exceptions.
"""


class SimError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SimError):
    """Invalid hardware geometry or layer configuration."""


class DataFormatError(SimError):
    """Malformed model or spike-tensor file."""


class BadMagicError(DataFormatError):
    """Spike-tensor file does not start with the expected magic bytes."""


class PayloadSizeError(DataFormatError):
    """Spike-tensor payload length disagrees with the header dims."""


class DimOverflowError(DataFormatError):
    """Header dimension field is zero or implies an absurd tensor size."""


class QuantizationError(SimError):
    """A quantized parameter does not fit its hardware register."""


class StreamError(SimError):
    """Weight or spike stream ended early or desynchronized."""
