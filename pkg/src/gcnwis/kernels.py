"""Backend selection for the combinatorial kernels.

The compiled extension is preferred when importable; otherwise the
pure-Python implementation is used. Set GCNWIS_PURE_PYTHON=1 to force the
fallback (useful for the backend benchmark and debugging).
"""

from __future__ import annotations

import os

if os.environ.get("GCNWIS_PURE_PYTHON"):
    from . import _pykernels as _impl

    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as _impl

        BACKEND = "python"

greedy_sweep = _impl.greedy_sweep
local_greedy_rounds = _impl.local_greedy_rounds
branch_and_bound = _impl.branch_and_bound


def available_backends() -> dict[str, object]:
    """All importable kernel modules, keyed by backend name."""
    from . import _pykernels

    backends = {"python": _pykernels}
    try:
        from . import _speedups

        backends["cython"] = _speedups
    except ImportError:
        pass
    return backends
