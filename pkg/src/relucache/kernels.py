"""Backend selection for the dense forward kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``RELUCACHE_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used.
"""

import os

from . import _fallback

_force_python = os.environ.get("RELUCACHE_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

forward_dense = _impl.forward_dense
min_preactivation = _impl.min_preactivation

__all__ = ["BACKEND", "forward_dense", "min_preactivation"]
