"""Stateless numeric helpers shared by layers and losses."""

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function (no overflow for large |x|)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shift-invariant softmax along `axis`; each slice sums to 1 within 1e-12."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_vjp(y: np.ndarray, dout: np.ndarray, axis: int = -1) -> np.ndarray:
    """Backward of softmax, given its output `y` and the upstream gradient."""
    inner = np.sum(dout * y, axis=axis, keepdims=True)
    return y * (dout - inner)
