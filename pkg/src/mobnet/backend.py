"""Kernel backend selection.

Hot loops (change-statistic matrices, MH chains, statistics, geodesics)
exist twice: a numba @njit implementation and a pure-numpy fallback.
The fallback is selected when numba is not importable or when the
environment variable MOBNET_NO_NUMBA is set to 1/true/yes/on.

Both paths are kept importable (when numba is present) so the benchmark
suite can time them side by side; ``use_numba()`` is what the dispatching
wrappers in :mod:`mobnet.kernels` consult.
"""

import os

_FLAG = "MOBNET_NO_NUMBA"


def _env_disabled() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via MOBNET_NO_NUMBA instead
    HAVE_NUMBA = False


def use_numba() -> bool:
    """True when the jitted kernel path is active."""
    return HAVE_NUMBA and not _env_disabled()


def active_backend() -> str:
    return "numba" if use_numba() else "numpy"
