"""Backend selection for the hot kernels.

Set ``PANDORA_DISABLE_NUMBA=1`` to force the pure-numpy fallback; numba is
also skipped silently when it cannot be imported.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_DISABLED = os.environ.get("PANDORA_DISABLE_NUMBA", "").strip().lower() not in _FALSY
USE_NUMBA = numba is not None and not NUMBA_DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is active, else return it unchanged."""
    if numba is None or NUMBA_DISABLED:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
