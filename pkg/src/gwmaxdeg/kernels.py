"""Backend selection for the tree-generation kernels.

The compiled backend (Cython, ``_speedups``) is used when importable; the
pure-Python fallback is always available and bit-identical (same RNG
consumption, same outputs for the same seed).  Set ``GWMAXDEG_PURE=1`` to
force the fallback, e.g. to benchmark or to rule the extension out when
debugging.
"""

from __future__ import annotations

import os

from . import _fallback

STATUS_OK = _fallback.STATUS_OK
STATUS_BUDGET = _fallback.STATUS_BUDGET
STATUS_TRIALS = _fallback.STATUS_TRIALS

try:
    from . import _speedups
except ImportError:  # extension not built; pure Python still works
    _speedups = None


def available_backends() -> dict:
    out = {"python": _fallback}
    if _speedups is not None:
        out["compiled"] = _speedups
    return out


def _select():
    if os.environ.get("GWMAXDEG_PURE"):
        return _fallback
    return _speedups if _speedups is not None else _fallback


_active = _select()


def backend_name() -> str:
    return _active.BACKEND


generate_degrees = _active.generate_degrees
generate_eq = _active.generate_eq
generate_depth_truncated = _active.generate_depth_truncated
