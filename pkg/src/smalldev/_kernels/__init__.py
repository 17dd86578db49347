"""Backend selection for the hot kernels.

The compiled Cython extension is used when importable; set SMALLDEV_PURE=1
to force the pure numpy fallback (e.g. for benchmarking or debugging).
"""

import os

if os.environ.get("SMALLDEV_PURE"):
    from . import _ref as _impl
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _ref as _impl

BACKEND = _impl.BACKEND_NAME
qmc_logprods = _impl.qmc_logprods
levinson_logdet = _impl.levinson_logdet

__all__ = ["BACKEND", "qmc_logprods", "levinson_logdet"]
