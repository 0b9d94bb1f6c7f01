"""Select the compiled kernels when built, else the numpy fallback.

Set ``GAUSSPOLY_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by the kernel-agreement tests).
"""
from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("GAUSSPOLY_PURE_PYTHON") != "1":
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

jacobi_eigh = _impl.jacobi_eigh
jacobi_svd_rows = _impl.jacobi_svd_rows
simplex_l1 = _impl.simplex_l1

OPTIMAL = _fallback.OPTIMAL
ITERATION_CAP = _fallback.ITERATION_CAP
SINGULAR_BASIS = _fallback.SINGULAR_BASIS
UNBOUNDED = _fallback.UNBOUNDED
