"""Select the kernel implementation at import time.

The compiled extension is preferred; set ``FLOQUET_MODES_PURE_PYTHON=1`` to
force the numpy fallback.
"""
import os

from . import _pykernels

if os.environ.get("FLOQUET_MODES_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

continued_inverse = _impl.continued_inverse
rk4_propagate = _impl.rk4_propagate
