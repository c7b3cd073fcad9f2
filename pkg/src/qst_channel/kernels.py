"""Kernel backend selection.

Uses the compiled ``_kernels`` extension when it was built and imports,
otherwise the numpy fallback. Set ``QST_CHANNEL_PURE_PYTHON=1`` to force
the fallback.
"""
import os

if os.environ.get("QST_CHANNEL_PURE_PYTHON"):
    from ._kernels_py import bisect_roots, parity_eval
    BACKEND = "python"
else:
    try:
        from ._kernels import bisect_roots, parity_eval
        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import bisect_roots, parity_eval
        BACKEND = "python"

__all__ = ["BACKEND", "bisect_roots", "parity_eval"]
