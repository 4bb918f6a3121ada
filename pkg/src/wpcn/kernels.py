"""Backend selection for the value-iteration hot loops.

The compiled extension (wpcn._speedups) is preferred when it was built;
otherwise the numpy implementation is used. Setting WPCN_PURE_PYTHON=1
in the environment forces the numpy path, which the benchmark and the
backend-parity tests rely on.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("WPCN_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

via_loop = _impl.via_loop
greedy = _impl.greedy


def backend() -> str:
    """Name of the active kernel backend ('cython' or 'python')."""
    return "python" if _impl is _kernels_py else "cython"
