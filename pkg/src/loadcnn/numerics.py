"""Dense kernels used by the network.

Vectors and matrices are plain float64 numpy arrays.  The ``naive_*`` functions
are loop implementations kept as reference oracles for the vectorised kernels.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import KernelTooLong, NonFiniteValue, ShapeMismatch


def as_vec(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeMismatch(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue("vector contains non-finite values")
    return v


def as_mat(values, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1 and rows is not None and cols is not None:
        if m.size != rows * cols:
            raise ShapeMismatch(f"{m.size} values cannot fill a {rows}x{cols} matrix")
        m = m.reshape(rows, cols)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteValue("matrix contains non-finite values")
    return m


def matvec(m, x) -> np.ndarray:
    m = as_mat(m)
    x = as_vec(x)
    if m.shape[1] != x.size:
        raise ShapeMismatch(f"cannot multiply {m.shape} matrix by length-{x.size} vector")
    return m @ x


def xcorr_valid(x, w) -> np.ndarray:
    """Unit-stride valid cross-correlation: ``out[i] = sum_j x[i+j] * w[j]``."""
    x = as_vec(x)
    w = as_vec(w)
    if w.size == 0 or w.size > x.size:
        raise KernelTooLong(f"kernel of length {w.size} for input of length {x.size}")
    return sliding_window_view(x, w.size) @ w


def xcorr_valid_batch(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Batched multi-filter form of :func:`xcorr_valid`, channels last.

    ``x`` is ``(B, W)`` and ``w`` is ``(F, k)``; the result is ``(B, W-k+1, F)``.
    """
    return conv_windows(x, w.shape[1]) @ w.T


def conv_windows(x: np.ndarray, k: int) -> np.ndarray:
    """Contiguous ``(B, W-k+1, k)`` copy of all length-``k`` windows of each row."""
    if k < 1 or k > x.shape[1]:
        raise KernelTooLong(f"kernel of length {k} for input of length {x.shape[1]}")
    return np.ascontiguousarray(sliding_window_view(x, k, axis=1))


def naive_matvec(m, x) -> list[float]:
    m = np.asarray(m, dtype=np.float64)
    rows, cols = m.shape
    if cols != len(x):
        raise ShapeMismatch("shape mismatch")
    out = []
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += float(m[i, j]) * float(x[j])
        out.append(acc)
    return out


def naive_xcorr_valid(x, w) -> list[float]:
    n, k = len(x), len(w)
    if k == 0 or k > n:
        raise KernelTooLong("kernel too long")
    out = []
    for i in range(n - k + 1):
        acc = 0.0
        for j in range(k):
            acc += float(x[i + j]) * float(w[j])
        out.append(acc)
    return out
