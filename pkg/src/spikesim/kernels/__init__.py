"""Backend selection for the batched packed-word kernels.

Two interchangeable engines exist: a numba-jitted one and a pure-numpy
one.  Set SPIKESIM_BACKEND=numba or =numpy to force a choice; left
unset, numba is used when it imports cleanly and numpy otherwise.
Both produce bit-identical results; the test suite holds them to that.
"""

import os

from ..errors import ConfigError
from . import numpy_backend

try:
    from . import numba_backend
    HAS_NUMBA = True
except ImportError:
    numba_backend = None
    HAS_NUMBA = False

ENV_VAR = "SPIKESIM_BACKEND"
BACKEND_NAMES = ("numba", "numpy")


def get_backend(name: str | None = None):
    """Resolve a backend module by name, env var, or availability."""
    if not name:
        name = os.environ.get(ENV_VAR, "").strip().lower()
    if not name:
        name = "numba" if HAS_NUMBA else "numpy"
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if not HAS_NUMBA:
            raise ConfigError("numba backend requested but numba is not importable")
        return numba_backend
    raise ConfigError(f"unknown backend {name!r}, expected one of {BACKEND_NAMES}")


def backend_name(name: str | None = None) -> str:
    return get_backend(name).NAME
