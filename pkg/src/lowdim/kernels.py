"""Hot kernels, compiled when available.

The Cython extension ``lowdim._kernels`` is used if it was built;
otherwise the numpy implementations in ``lowdim._fallback`` are used.
Set ``LOWDIM_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

BACKEND = "python"
_compiled = None
if os.environ.get("LOWDIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _fallback


def directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    return float(_impl.directed_hausdorff(np.ascontiguousarray(a, dtype=np.float64),
                                          np.ascontiguousarray(b, dtype=np.float64)))


def im2col(x: np.ndarray, k: int, stride: int, pad: int) -> np.ndarray:
    return _impl.im2col(np.ascontiguousarray(x, dtype=np.float64), k, stride, pad)


def col2im(cols: np.ndarray, shape: tuple[int, int, int, int], k: int, stride: int, pad: int) -> np.ndarray:
    B, C, H, W = shape
    return _impl.col2im(np.ascontiguousarray(cols, dtype=np.float64), B, C, H, W, k, stride, pad)
