"""Kernel dispatch: the compiled core when importable, else the NumPy fallback.

Set ``EDGEDELTA_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
implementation in use.
"""

import os

from . import _kernels_py

if os.environ.get("EDGEDELTA_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

simhash64 = _impl.simhash64
simhash64_batch = _impl.simhash64_batch
best_match = _impl.best_match
evict_argmax = _impl.evict_argmax
hamming64 = _impl.hamming64
