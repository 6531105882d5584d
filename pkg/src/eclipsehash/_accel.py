"""Backend selection for the hot kernels.

Set ``ECLIPSEHASH_NUMBA=0`` to force the pure-numpy code paths. The flag is
read once at import time.
"""
import os

_flag = os.environ.get("ECLIPSEHASH_NUMBA", "1").strip().lower()

try:
    import numba  # noqa: F401
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


USE_NUMBA = HAVE_NUMBA and _flag not in ("0", "false", "no", "off")


def backend():
    return "numba" if USE_NUMBA else "numpy"
