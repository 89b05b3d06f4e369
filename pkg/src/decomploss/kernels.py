"""Backend selection for the hot numerical kernels.

The compiled extension is used when it imports; otherwise the numpy
version is used. Set ``DECOMPLOSS_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("DECOMPLOSS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        _impl = _ckernels


def moving_average_3d(x: np.ndarray, kernel: int, backend: str | None = None) -> np.ndarray:
    """Centered moving average along axis 1 of a float64 (N, T, C) array.

    Each window is padded by repeating its first and last rows
    ``(kernel - 1) // 2`` times. ``backend`` overrides the import-time
    choice ("python" or "cython").
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    impl = _impl
    if backend == "python":
        impl = _kernels_py
    elif backend == "cython":
        if BACKEND != "cython":
            raise RuntimeError("compiled kernels are not available")
        impl = _impl
    elif backend is not None:
        raise ValueError(f"unknown backend {backend!r}")
    return impl.moving_average_3d(x, int(kernel))
