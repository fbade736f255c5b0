"""Selects the compiled kernels when built, the numpy fallback otherwise.

Set ``COSET_CHAINS_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("COSET_CHAINS_BACKEND", "").lower() != "python":
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

jacobi_eigenvalues = _impl.jacobi_eigenvalues
rt_walk = _impl.rt_walk
