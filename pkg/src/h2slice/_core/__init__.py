"""Backend selection for the hot kernels.

The compiled extension is preferred; the NumPy fallback is used when the
extension is unavailable or when H2SLICE_PURE_PYTHON is set in the
environment. ``BACKEND`` names the active implementation.
"""

import os

if os.environ.get("H2SLICE_PURE_PYTHON"):
    from . import fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import fallback as _impl

        BACKEND = "python"

bk_factor = _impl.bk_factor
bk_inertia = _impl.bk_inertia
jacobi_eigvals = _impl.jacobi_eigvals
