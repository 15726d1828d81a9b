"""Numba switch.

Hot kernels in :mod:`bcclab.kernels` come in two flavours: an explicit-loop
version compiled with ``numba.njit`` and a vectorized numpy version.  The
compiled path is used when numba imports cleanly and the environment variable
``BCCLAB_DISABLE_NUMBA`` is unset (or ``0``).
"""

import os

_FLAG = "BCCLAB_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(_FLAG, "0").strip().lower() in ("", "0", "false", "no")


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _numba = None

NUMBA_AVAILABLE = _numba is not None


def use_numba():
    """True when the compiled kernels should be dispatched to."""
    return NUMBA_AVAILABLE and _numba_requested()


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op when numba is missing."""
    kwargs.setdefault("cache", True)
    if _numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return _numba.njit(*args, **kwargs)
