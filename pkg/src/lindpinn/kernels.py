"""Backend selection for the numeric kernels.

The compiled Cython module is used when it imports; otherwise the numpy
fallback. Set ``LINDPINN_PURE=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("LINDPINN_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

eigh_batch = _impl.eigh_batch
rk4_lindblad = _impl.rk4_lindblad

__all__ = ["BACKEND", "eigh_batch", "rk4_lindblad"]
