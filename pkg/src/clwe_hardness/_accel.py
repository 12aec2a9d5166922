"""Backend selection for the hot numeric kernels.

Kernels are compiled with numba when it is importable, unless the
``CLWE_HARDNESS_NUMBA`` environment variable is set to ``0``/``false``/``off``.
The pure-numpy implementations are always importable and are the reference
for the compiled ones.
"""

import os

ENV_FLAG = "CLWE_HARDNESS_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None


def numba_requested():
    value = os.environ.get(ENV_FLAG, "1").strip().lower()
    return value not in ("0", "false", "no", "off")


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and numba_requested()


def jit(func):
    """Compile ``func`` with ``numba.njit`` or return ``None`` if unavailable."""
    if numba is None:
        return None
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
