"""Kernel backend selection.

The hot per-iteration kernels exist twice: a compiled 2D extension
(``_fused``, Cython/OpenMP) and a dimension-agnostic numpy fallback
(``pure``).  Selection happens at import time; set ``POREFLOW_BACKEND`` to
``pure`` or ``fused`` to force one (forcing ``fused`` raises if the
extension is missing).  Grids that are not 2D always take the pure path.

``POREFLOW_THREADS`` caps OpenMP threads in the fused kernels and FFT
workers alike.
"""

from __future__ import annotations

import os

from . import pure

try:
    from . import _fused
except ImportError:
    _fused = None

_requested = os.environ.get("POREFLOW_BACKEND", "").strip().lower()
if _requested and _requested not in ("pure", "fused"):
    raise ValueError(
        f"POREFLOW_BACKEND must be 'pure' or 'fused', got {_requested!r}"
    )
if _requested == "fused" and _fused is None:
    raise ImportError(
        "POREFLOW_BACKEND=fused but the compiled extension is not available"
    )

HAVE_FUSED = _fused is not None


def default_backend_name() -> str:
    if _requested:
        return _requested
    return "fused" if HAVE_FUSED else "pure"


def kernels_for(dim: int):
    """Kernel module to use for a grid of the given dimension."""
    if default_backend_name() == "fused" and dim == 2:
        return _fused
    return pure


def num_threads() -> int:
    cap = os.environ.get("POREFLOW_THREADS", "").strip()
    if cap:
        return max(1, int(cap))
    return max(1, os.cpu_count() or 1)
