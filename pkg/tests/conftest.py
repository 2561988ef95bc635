"""Shared brute-force oracles and gradient-check case builders.

The oracles are deliberately naive (nested loops, two-pass statistics) so they
stay independent of the vectorised implementation paths they check.
"""

from __future__ import annotations

import numpy as np

from singmos.nn.layers import Conv1d, Dense, Dropout, Gate, MaxPool1d, ReLU
from singmos.nn.losses import bhattacharyya_with_grads, mse_loss_with_grad
from singmos.nn.functional import softmax, softmax_vjp
from singmos.nn.tensor import LayerParams


# ---------------------------------------------------------------- oracles

def conv1d_oracle(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Direct evaluation of the valid-convolution sum, loop by loop."""
    n, c_in, length = x.shape
    c_out, _, k = w.shape
    l_out = length - k + 1
    out = np.zeros((n, c_out, l_out))
    for s in range(n):
        for o in range(c_out):
            for i in range(l_out):
                acc = b[o]
                for c in range(c_in):
                    for t in range(k):
                        acc += w[o, c, t] * x[s, c, i + t]
                out[s, o, i] = acc
    return out


def maxpool1d_oracle(x: np.ndarray, window: int, stride: int) -> np.ndarray:
    n, c, length = x.shape
    l_out = (length - window) // stride + 1
    out = np.zeros((n, c, l_out))
    for s in range(n):
        for ch in range(c):
            for i in range(l_out):
                out[s, ch, i] = max(x[s, ch, i * stride : i * stride + window])
    return out


def dense_oracle(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, _ = x.shape
    d_out = w.shape[0]
    out = np.zeros((n, d_out))
    for s in range(n):
        for o in range(d_out):
            acc = b[o]
            for i in range(w.shape[1]):
                acc += w[o, i] * x[s, i]
            out[s, o] = acc
    return out


# ------------------------------------------------- gradient-check cases
#
# Each builder returns (f, inputs) for singmos.nn.grad_check: f maps the
# current inputs to (scalar, analytic grads). Vector-valued ops are reduced
# to a scalar through a fixed random probe functional.

def _away_from_zero(x: np.ndarray, margin: float = 5e-3) -> np.ndarray:
    close = np.abs(x) < margin
    x[close] += margin * np.where(x[close] >= 0, 1.0, -1.0)
    return x


def _distinct_windows(rng, shape, window: int, stride: int, gap: float = 1e-3) -> np.ndarray:
    """Random input whose pooling windows have no near-ties (differentiable point)."""
    while True:
        x = rng.normal(size=shape)
        win = np.lib.stride_tricks.sliding_window_view(x, window, axis=2)[:, :, ::stride, :]
        sorted_win = np.sort(win, axis=3)
        if window == 1 or np.min(sorted_win[..., -1] - sorted_win[..., -2]) > gap:
            return x


def make_dense_case(rng):
    d_in, d_out, n = 4, 8, 3
    w = rng.normal(size=(d_out, d_in))
    b = rng.normal(size=d_out)
    x = rng.normal(size=(n, d_in))
    probe = rng.normal(size=(n, d_out))

    def f(inputs):
        w_cur, b_cur, x_cur = inputs
        layer = Dense(LayerParams.create(w_cur, b_cur))
        out = layer.forward(x_cur)
        dx = layer.backward(probe)
        return float(np.sum(out * probe)), [layer.params.weights.grad, layer.params.bias.grad, dx]

    return f, [w, b, x]


def make_conv1d_case(rng):
    c_in, c_out, k, length, n = 2, 3, 3, 9, 2
    w = rng.normal(size=(c_out, c_in, k))
    b = rng.normal(size=c_out)
    x = rng.normal(size=(n, c_in, length))
    probe = rng.normal(size=(n, c_out, length - k + 1))

    def f(inputs):
        w_cur, b_cur, x_cur = inputs
        layer = Conv1d(LayerParams.create(w_cur, b_cur))
        out = layer.forward(x_cur)
        dx = layer.backward(probe)
        return float(np.sum(out * probe)), [layer.params.weights.grad, layer.params.bias.grad, dx]

    return f, [w, b, x]


def make_maxpool_case(rng):
    window, stride = 2, 2
    x = _distinct_windows(rng, (2, 3, 8), window, stride)
    layer = MaxPool1d(window, stride)
    probe = rng.normal(size=(2, 3, (8 - window) // stride + 1))

    def f(inputs):
        out = layer.forward(inputs[0])
        dx = layer.backward(probe)
        return float(np.sum(out * probe)), [dx]

    return f, [x]


def make_relu_case(rng):
    x = _away_from_zero(rng.normal(size=(3, 7)))
    probe = rng.normal(size=(3, 7))
    layer = ReLU()

    def f(inputs):
        out = layer.forward(inputs[0])
        dx = layer.backward(probe)
        return float(np.sum(out * probe)), [dx]

    return f, [x]


def make_gate_case(rng):
    x = rng.normal(size=16)
    probe = rng.normal(size=16)
    layer = Gate()

    def f(inputs):
        out = layer.forward(inputs[0])
        dx = layer.backward(probe)
        return float(np.sum(out * probe)), [dx]

    return f, [x]


def make_softmax_case(rng):
    x = rng.normal(size=8)
    probe = rng.normal(size=8)

    def f(inputs):
        y = softmax(inputs[0])
        return float(np.sum(y * probe)), [softmax_vjp(y, probe)]

    return f, [x]


def make_dropout_case(rng):
    # mask frozen by reseeding the same generator on every evaluation
    mask_seed = int(rng.integers(0, 2**32))
    x = rng.normal(size=(3, 8))
    probe = rng.normal(size=(3, 8))
    layer = Dropout(0.4)

    def f(inputs):
        out = layer.forward(inputs[0], training=True, rng=np.random.default_rng(mask_seed))
        dx = layer.backward(probe)
        return float(np.sum(out * probe)), [dx]

    return f, [x]


def make_mse_case(rng):
    pred = rng.normal(size=8)
    target = rng.normal(size=8)

    def f(inputs):
        value, dpred = mse_loss_with_grad(inputs[0], target)
        return value, [dpred]

    return f, [pred]


def make_bd_case(rng):
    p = softmax(rng.normal(size=8))
    q = softmax(rng.normal(size=8))

    def f(inputs):
        value, dp, dq = bhattacharyya_with_grads(inputs[0], inputs[1])
        return value, [dp, dq]

    return f, [p, q]


GRAD_CASES = {
    "conv1d": make_conv1d_case,
    "maxpool1d": make_maxpool_case,
    "dense": make_dense_case,
    "relu": make_relu_case,
    "gate": make_gate_case,
    "softmax": make_softmax_case,
    "dropout-mask-fixed": make_dropout_case,
    "mse": make_mse_case,
    "bhattacharyya": make_bd_case,
}
