"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the numpy
implementation is used.  Setting ``CLEOBS_PURE_PYTHON=1`` forces the numpy
backend.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("CLEOBS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

series_eval = _impl.series_eval
cascade_counts = _impl.cascade_counts
passage_block = _impl.passage_block

RUNNING, EXIT_LOWER, EXIT_UPPER = 0, 1, 2


def backend(name: str):
    """Return the kernel module for ``name`` in ``{"python", "cython"}``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
