"""Kernel selection: the compiled recurrence if it was built, numpy otherwise.

Set ``EWISHART_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _recurrence_py

BACKEND = "python"
fill_coefficients = _recurrence_py.fill_coefficients

if os.environ.get("EWISHART_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _recurrence
    except ImportError:
        pass
    else:
        fill_coefficients = _recurrence.fill_coefficients
        BACKEND = "cython"

__all__ = ["BACKEND", "fill_coefficients"]
