"""Backend selection for the hot 1-d transport kernels.

The compiled extension is preferred when present; setting the environment
variable ``SWSYNTH_PURE_PYTHON=1`` forces the NumPy fallback (used by the
benchmark and the backend parity tests). Both backends expose the same four
functions and the same deterministic tie-breaking.
"""

import os

if os.environ.get("SWSYNTH_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

w2sq_rows = _impl.w2sq_rows
w2sq_grad_rows = _impl.w2sq_grad_rows
w1_rows = _impl.w1_rows
sw1_grid_value_grad = _impl.sw1_grid_value_grad


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return BACKEND
