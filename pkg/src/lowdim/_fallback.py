"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np

_CHUNK = 1 << 22  # max pairwise entries materialised at once


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # coordinates summed left to right so results match the compiled loop exactly
    diff = a[:, None, :] - b[None, :, :]
    sq = diff * diff
    acc = sq[..., 0].copy()
    for k in range(1, sq.shape[-1]):
        acc += sq[..., k]
    return acc


def directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    step = max(1, _CHUNK // max(1, len(b) * a.shape[1]))
    best = 0.0
    for lo in range(0, len(a), step):
        nearest = _sq_dists(a[lo : lo + step], b).min(axis=1)
        best = max(best, float(nearest.max()))
    return float(np.sqrt(best))


def im2col(x: np.ndarray, k: int, stride: int, pad: int) -> np.ndarray:
    B, C, H, W = x.shape
    oh = (H + 2 * pad - k) // stride + 1
    ow = (W + 2 * pad - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    win = win[:, :, : stride * (oh - 1) + 1 : stride, : stride * (ow - 1) + 1 : stride]
    # [B, C, OH, OW, k, k] -> [B, OH, OW, C, k, k]
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(B * oh * ow, C * k * k)


def col2im(cols: np.ndarray, B: int, C: int, H: int, W: int, k: int, stride: int, pad: int) -> np.ndarray:
    oh = (H + 2 * pad - k) // stride + 1
    ow = (W + 2 * pad - k) // stride + 1
    c6 = cols.reshape(B, oh, ow, C, k, k)
    xp = np.zeros((B, C, H + 2 * pad, W + 2 * pad))
    for di in range(k):
        for dj in range(k):
            xp[:, :, di : di + stride * oh : stride, dj : dj + stride * ow : stride] += c6[
                :, :, :, :, di, dj
            ].transpose(0, 3, 1, 2)
    return xp[:, :, pad : pad + H, pad : pad + W].copy()
