"""Selects the compiled kernel extension when available.

Set SSVAMP_FORCE_PYTHON=1 to force the numpy fallback (used by the
benchmark and by tests that compare the two backends).
"""

import os

if os.environ.get("SSVAMP_FORCE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND


def backend_name() -> str:
    return BACKEND
