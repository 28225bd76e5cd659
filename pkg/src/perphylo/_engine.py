"""Pick the reduction engine implementation at import time.

The Cython build (``perphylo._speedups``) is preferred; the pure-Python twin
(``perphylo._native``) is the fallback and can be forced with the
``PERPHYLO_PURE`` environment variable.  Both implementations are required to
produce identical event streams.
"""

import os

from ._native import ReductionEngine as PyReductionEngine

if os.environ.get("PERPHYLO_PURE"):
    ReductionEngine = PyReductionEngine
    BACKEND = "pure-python"
else:
    try:
        from ._speedups import ReductionEngine  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        ReductionEngine = PyReductionEngine
        BACKEND = "pure-python"


def backend_name() -> str:
    return BACKEND
