"""Backend selection for the hot kernels.

Kernels are compiled with numba when it is importable and the environment
variable ``PMULAB_DISABLE_NUMBA`` is unset (or ``0``).  Otherwise the
vectorised numpy implementations are used.  Both paths produce bit-identical
results; the choice only affects speed.
"""
from __future__ import annotations

import os

_flag = os.environ.get("PMULAB_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled


def njit(func):
    """Compile ``func`` in nopython mode, or return it untouched."""
    if _njit is None:
        return func
    # no fastmath: reassociation/contraction would break bit-exactness
    return _njit(cache=True, nogil=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
