"""Optional numba acceleration.

Set ``LMSZ_SPIN_NO_NUMBA=1`` to run every kernel as plain numpy. The flag is
read once at import time.
"""
import os

_flag = os.environ.get("LMSZ_SPIN_NO_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _flag not in ("1", "true", "yes", "on")

try:
    import numba as _nb
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    _nb = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_REQUESTED and NUMBA_AVAILABLE


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if USE_NUMBA:
        return _nb.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
