"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the pure numpy
implementation when the extension is missing or NUDGELOOP_PURE_KERNELS=1.
``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

from . import pure as _pure

if os.environ.get("NUDGELOOP_PURE_KERNELS") == "1":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND: str = _impl.BACKEND
dtw_cost = _impl.dtw_cost
lstdq_accumulate = _impl.lstdq_accumulate

__all__ = ["BACKEND", "dtw_cost", "lstdq_accumulate", "pure"]
pure = _pure
