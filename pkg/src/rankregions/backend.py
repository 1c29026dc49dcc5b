"""Selects the fitting-kernel backend at import time.

Prefers the compiled extension (`rankregions._kernels`) and falls back to the
pure-NumPy twin (`rankregions._kernels_py`). Override with the environment
variable RANKREGIONS_BACKEND set to "compiled" or "python"; the default
"auto" takes the extension when it imports.

Both backends implement the same iteration policies, so results agree up to
floating-point associativity; byte-level reproducibility is guaranteed per
selected backend.
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("RANKREGIONS_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise RuntimeError(
        f"RANKREGIONS_BACKEND must be auto, compiled or python, got {_requested!r}"
    )

_impl = None
if _requested in ("auto", "compiled"):
    try:
        from . import _kernels as _compiled

        _impl = _compiled
    except ImportError:
        if _requested == "compiled":
            raise
if _impl is None:
    _impl = _kernels_py

FIT_OK = _kernels_py.FIT_OK
FIT_SEPARATED = _kernels_py.FIT_SEPARATED
FIT_FAILED = _kernels_py.FIT_FAILED


def backend_name() -> str:
    """Name of the active backend: "compiled" or "python"."""
    return _impl.BACKEND_NAME


def available_backends() -> dict:
    """All importable backend modules keyed by name (for benchmarks/tests)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled

        out["compiled"] = _compiled
    except ImportError:
        pass
    return out


def perceptron_value_grad(*args, **kwargs):
    return _impl.perceptron_value_grad(*args, **kwargs)


def perceptron_fit(*args, **kwargs):
    return _impl.perceptron_fit(*args, **kwargs)


def perceptron_fit_many(*args, **kwargs):
    return _impl.perceptron_fit_many(*args, **kwargs)


def logistic_value_grad(*args, **kwargs):
    return _impl.logistic_value_grad(*args, **kwargs)


def logistic_hessian(*args, **kwargs):
    return _impl.logistic_hessian(*args, **kwargs)


def logistic_fit(*args, **kwargs):
    return _impl.logistic_fit(*args, **kwargs)


def logistic_fit_many(*args, **kwargs):
    return _impl.logistic_fit_many(*args, **kwargs)
