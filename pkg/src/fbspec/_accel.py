# Numba if available and not disabled; otherwise the pure-numpy kernels are used.
#
# Set FBSPEC_DISABLE_NUMBA=1 before import to force the numpy path.

import logging
import os

logger = logging.getLogger(__name__)

_disabled = os.environ.get("FBSPEC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled

if HAVE_NUMBA:
    njit = numba.njit
else:  # pragma: no cover

    def njit(pyfunc=None, **kwargs):
        """Null decorator when numba is not importable."""

        def wrap(func):
            return func

        return wrap if pyfunc is None else wrap(pyfunc)


if _disabled:
    logger.debug("numba disabled by FBSPEC_DISABLE_NUMBA; using numpy kernels")
