"""Kernel backend selection.

Imports the compiled Cython kernels when the extension was built, falling
back to the NumPy implementations otherwise. ``SZPRED_KERNELS=python``
forces the fallback (used by the backend benchmark and tests).
"""

import os

from szpred._kernels import _pykernels

if os.environ.get("SZPRED_KERNELS", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from szpred._kernels import _cykernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
dwt_level = _impl.dwt_level
idwt_level = _impl.idwt_level
best_split = _impl.best_split
