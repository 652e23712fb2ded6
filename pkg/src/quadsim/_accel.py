"""Optional numba acceleration.

Set ``QUADSIM_NUMBA=0`` in the environment to force the pure numpy/Python
path. The flag is read once at import time.
"""
import logging
import os

logger = logging.getLogger(__name__)

_requested = os.environ.get("QUADSIM_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    if not _requested:
        raise ImportError("disabled by QUADSIM_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError as exc:
    numba = None
    HAVE_NUMBA = False
    if _requested:
        logger.warning("numba unavailable (%s); using the numpy fallback", exc)

USE_NUMBA = HAVE_NUMBA


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise a passthrough decorator."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
