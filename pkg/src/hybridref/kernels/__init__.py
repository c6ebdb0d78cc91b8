"""Kernel backend selection.

The compiled extension (`hybridref.kernels._fast`) is picked at import time
when it is available; otherwise the pure-numpy fallback is used. Set
``HYBRIDREF_KERNELS`` to ``compiled`` or ``python`` to force one side
(``compiled`` raises if the extension was not built), or leave it at ``auto``.

Both backends expose the same functions with identical semantics; callers
normalize inputs to C-contiguous float64 arrays (2-d for the row-wise
kernels, 1-d for the elementwise ones).
"""

import os

from hybridref.errors import ConfigError
from hybridref.kernels import numpy_backend

_choice = os.environ.get("HYBRIDREF_KERNELS", "auto").lower()
if _choice not in ("auto", "compiled", "python"):
    raise ConfigError(
        f"HYBRIDREF_KERNELS must be 'auto', 'compiled' or 'python', got {_choice!r}"
    )

_compiled = None
if _choice in ("auto", "compiled"):
    try:
        from hybridref.kernels import _fast as _compiled
    except ImportError:
        if _choice == "compiled":
            raise ConfigError(
                "HYBRIDREF_KERNELS=compiled but the extension is not built; "
                "reinstall the package or use HYBRIDREF_KERNELS=python"
            )

active = _compiled if _compiled is not None else numpy_backend
BACKEND_NAME = "compiled" if _compiled is not None else "python"

softmax_fwd = active.softmax_fwd
softmax_bwd = active.softmax_bwd
log_softmax_fwd = active.log_softmax_fwd
log_softmax_bwd = active.log_softmax_bwd
layernorm_fwd = active.layernorm_fwd
layernorm_bwd = active.layernorm_bwd
gelu_fwd = active.gelu_fwd
gelu_bwd = active.gelu_bwd
sigmoid_fwd = active.sigmoid_fwd
sigmoid_bwd = active.sigmoid_bwd
softplus_fwd = active.softplus_fwd
softplus_bwd = active.softplus_bwd
adam_update = active.adam_update


def get_backend(name: str):
    """Return a backend module by name ('python' or 'compiled'), for benchmarks/tests."""
    if name == "python":
        return numpy_backend
    if name == "compiled":
        if _compiled is None:
            raise ConfigError("compiled kernel backend is not available in this install")
        return _compiled
    raise ConfigError(f"unknown kernel backend {name!r}")
