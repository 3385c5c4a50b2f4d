"""Pick the compiled kernels when available, else the NumPy fallback.

Set ``BIGD_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

fallback = _fallback

if os.environ.get("BIGD_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _fallback
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None
    kernels = compiled if compiled is not None else _fallback

BACKEND = kernels.NAME
