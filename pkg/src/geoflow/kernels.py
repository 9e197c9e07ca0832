"""Kernel backend selection.

The compiled extension (geoflow._kernels, Cython) is used when importable;
set GEOFLOW_PURE_PYTHON=1 to force the numpy reference implementation.
Both backends produce identical results up to floating-point associativity;
tests assert agreement.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("GEOFLOW_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND

arakawa_channel = _impl.arakawa_channel
rigid_rk4_controlled = _impl.rigid_rk4_controlled
rigid_rk4_free = _impl.rigid_rk4_free

# The batched tridiagonal factor/solve pair always comes in matched form
# from one backend.
thomas_factor = _impl.thomas_factor
thomas_solve = _impl.thomas_solve
