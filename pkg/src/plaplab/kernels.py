"""Backend selector for the hot energy loops.

Prefers the compiled Cython extension ``plaplab._kernels``; transparently
falls back to the vectorized numpy implementation.  Set the environment
variable ``PLAPLAB_PURE_KERNELS=1`` (before import) to force the fallback,
e.g. for benchmarking or debugging.
"""

import os

from . import _kernels_py

if os.environ.get("PLAPLAB_PURE_KERNELS", "").strip() not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

energy_terms = _impl.energy_terms
energy_gradient = _impl.energy_gradient
cell_kappa = _impl.cell_kappa


def available_backends():
    """Name -> module for every importable backend (used by the benchmark)."""
    table = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]
        table["compiled"] = _kernels
    except ImportError:
        pass
    return table
