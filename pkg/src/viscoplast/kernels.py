"""Backend selection for the per-element constitutive sweep.

The compiled Cython kernel is preferred when importable; the NumPy fallback
is always available.  Set ``VISCOPLAST_KERNELS=py`` (or ``c``) to force a
backend, e.g. for the backend benchmark.
"""

import os

from . import _kernels_py

_choice = os.environ.get("VISCOPLAST_KERNELS", "auto").lower()

if _choice in ("auto", "c", "compiled"):
    try:
        from . import _kernels_c as _impl
    except ImportError:
        if _choice in ("c", "compiled"):
            raise ImportError(
                "compiled kernels requested via VISCOPLAST_KERNELS but the "
                "extension is not built; reinstall or use VISCOPLAST_KERNELS=py"
            )
        _impl = _kernels_py
elif _choice in ("py", "python"):
    _impl = _kernels_py
else:
    raise ValueError(f"unrecognised VISCOPLAST_KERNELS value {_choice!r}")

sweep = _impl.sweep


def backend() -> str:
    """Name of the active sweep backend ('compiled' or 'python')."""
    return _impl.BACKEND


def model_sweep(reg, S, D, want_jac=True):
    """Run the sweep for a RegularizedModel on (n, 3) component arrays."""
    code = reg.base.kernel_code
    p0, p1, p2 = reg.base.kernel_params
    return sweep(code, p0, p1, p2, reg.eps1, reg.eps2, S, D, want_jac)
