"""Optional numba acceleration.

Set ``DISTGL_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba is
not importable the numpy path is used automatically.
"""
from __future__ import annotations

import os

DISABLED = os.environ.get("DISTGL_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def default_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
