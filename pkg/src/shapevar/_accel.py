"""Numba switch.

Kernels in :mod:`shapevar.kernels` are written twice: a numba ``@njit``
version and a vectorised numpy version.  Which one is used is decided once,
at import time:

* ``SHAPEVAR_DISABLE_NUMBA=1`` forces the numpy path;
* a missing numba install also falls back to numpy;
* ``SHAPEVAR_THREADS`` caps numba's thread pool.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("SHAPEVAR_DISABLE_NUMBA", "").lower() in _FALSY


def thread_cap():
    raw = os.environ.get("SHAPEVAR_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return None
    return n if n > 0 else None


if HAVE_NUMBA:
    # the bundled TBB is too old and only produces a warning; skip it
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

if USE_NUMBA:
    _cap = thread_cap()
    if _cap is not None:
        numba.set_num_threads(min(_cap, numba.config.NUMBA_NUM_THREADS))


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    The compiled function is always built when numba is installed (so the
    benchmark can compare both paths); dispatch happens in the callers.
    """
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


prange = numba.prange if HAVE_NUMBA else range
