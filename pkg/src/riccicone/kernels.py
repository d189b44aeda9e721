"""Backend selection for the flow kernels.

The compiled extension is used when importable; ``RICCICONE_PURE_PYTHON=1``
forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("RICCICONE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
rhs = _impl.rhs
rk4_step = _impl.rk4_step

BACKENDS = {"python": _kernels_py}
try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
    BACKENDS["cython"] = _compiled
except ImportError:
    pass
