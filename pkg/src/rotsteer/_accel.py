"""Selects the compiled kernels when built, else the numpy fallback.

Set ``ROTSTEER_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
accumulate_fractional_delays = _kernels_py.accumulate_fractional_delays

if not os.environ.get("ROTSTEER_PURE_PYTHON"):
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        accumulate_fractional_delays = _kernels.accumulate_fractional_delays
