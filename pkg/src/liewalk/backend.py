"""Kernel backend selection.

The hot inner loops (trajectory products, Monte Carlo endpoint batches)
have two interchangeable implementations: a numba ``@njit`` path and a
pure-numpy path.  The environment variable ``LIEWALK_BACKEND`` selects
between them:

    LIEWALK_BACKEND=numba   force numba (error if numba is unavailable)
    LIEWALK_BACKEND=numpy   force the pure-numpy fallback
    unset / auto            numba if importable, else numpy

Both paths compute the same quantities; ``benchmarks/bench_backends.py``
compares their throughput.  Within a fixed backend, outputs are
deterministic functions of the inputs.
"""

import os

_choice = os.environ.get("LIEWALK_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"LIEWALK_BACKEND must be auto|numba|numpy, got {_choice!r}")

NUMBA_ENABLED = False
if _choice in ("auto", "numba"):
    try:
        from numba import njit  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        if _choice == "numba":
            raise
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(func=None, **kwargs):
        """No-op stand-in so kernel definitions import cleanly without numba."""
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
