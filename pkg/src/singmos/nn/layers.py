"""Network layers: forward passes paired with hand-derived backward passes.

Shape convention: a leading batch axis everywhere. Convolution and pooling act
on [batch, channels, length]; dense layers on [batch, features]. backward()
takes the upstream gradient shaped like forward()'s return value, accumulates
parameter gradients in place, and returns the gradient w.r.t. the layer input.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigurationError, DimensionError
from .functional import sigmoid
from .tensor import LayerParams


class Conv1d:
    """Valid (unpadded), stride-1 1D convolution.

    Forward lowers the input to an im2col matrix and runs one GEMM; the matrix
    is kept for the weight-gradient GEMM in backward. Set input_grad=False on
    a network's first layer to skip the (unused) gradient w.r.t. its input.
    """

    def __init__(self, params: LayerParams, input_grad: bool = True):
        if params.weights.data.ndim != 3:
            raise DimensionError(
                f"conv1d weights must be [c_out, c_in, kernel], got shape {params.weights.shape}"
            )
        c_out = params.weights.shape[0]
        if params.bias.shape != (c_out,):
            raise DimensionError(
                f"conv1d bias axis: expected length {c_out}, got shape {params.bias.shape}"
            )
        self.params = params
        self.input_grad = input_grad
        self._cols = None
        self._in_len = 0

    def forward(self, x: np.ndarray) -> np.ndarray:
        w = self.params.weights.data
        c_out, c_in, k = w.shape
        if x.ndim != 3:
            raise DimensionError(f"conv1d input must be [batch, channels, length], got rank {x.ndim}")
        if x.shape[1] != c_in:
            raise DimensionError(
                f"conv1d channel axis: input has {x.shape[1]} channels, weights expect {c_in}"
            )
        if x.shape[2] < k:
            raise DimensionError(
                f"conv1d length axis: input length {x.shape[2]} is shorter than kernel {k}"
            )
        n, _, length = x.shape
        l_out = length - k + 1
        win = sliding_window_view(x, k, axis=2)  # [n, c_in, l_out, k] view, no copy
        cols = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(n * l_out, c_in * k)
        out = cols @ w.reshape(c_out, c_in * k).T
        out += self.params.bias.data
        self._cols = cols
        self._in_len = length
        return np.ascontiguousarray(out.reshape(n, l_out, c_out).transpose(0, 2, 1))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        w = self.params.weights.data
        c_out, c_in, k = w.shape
        n, _, l_out = dout.shape
        dout_mat = np.ascontiguousarray(dout.transpose(0, 2, 1)).reshape(n * l_out, c_out)
        self.params.weights.grad += (dout_mat.T @ self._cols).reshape(c_out, c_in, k)
        self.params.bias.grad += dout.sum(axis=(0, 2))
        if not self.input_grad:
            return None
        # out[n,o,i] sums w[o,c,t] * x[n,c,i+t], so dx folds the col gradient
        # back by accumulating each kernel tap onto its shifted input slice.
        dcols = (dout_mat @ w.reshape(c_out, c_in * k)).reshape(n, l_out, c_in, k)
        dx = np.zeros((n, c_in, self._in_len))
        for t in range(k):
            dx[:, :, t : t + l_out] += dcols[:, :, :, t].transpose(0, 2, 1)
        return dx


class MaxPool1d:
    """Max pooling over a sliding window; gradient goes to the first argmax."""

    def __init__(self, window: int, stride: int):
        if window < 1 or stride < 1:
            raise ConfigurationError(f"maxpool1d window/stride must be positive, got {window}/{stride}")
        self.window = window
        self.stride = stride
        self._idx = None
        self._in_shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3:
            raise DimensionError(f"maxpool1d input must be [batch, channels, length], got rank {x.ndim}")
        if x.shape[2] < self.window:
            raise DimensionError(
                f"maxpool1d length axis: input length {x.shape[2]} is shorter than window {self.window}"
            )
        win = sliding_window_view(x, self.window, axis=2)[:, :, :: self.stride, :]
        if self.window == 2:
            first, second = win[..., 0], win[..., 1]
            take_second = second > first
            idx = take_second.astype(np.int64)
            out = np.where(take_second, second, first)
        else:
            idx = win.argmax(axis=3)
            out = np.take_along_axis(win, idx[..., None], axis=3)[..., 0]
        self._idx = idx
        self._in_shape = x.shape
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx = np.zeros(self._in_shape)
        l_out = self._idx.shape[2]
        pos = self._idx + (np.arange(l_out) * self.stride)[None, None, :]
        if self.stride >= self.window:
            # windows are disjoint, so positions are unique per row
            np.put_along_axis(dx, pos, dout, axis=2)
        else:
            n, c, _ = self._in_shape
            np.add.at(dx, (np.arange(n)[:, None, None], np.arange(c)[None, :, None], pos), dout)
        return dx


class Dense:
    """Affine map out = x @ W.T + b."""

    def __init__(self, params: LayerParams):
        if params.weights.data.ndim != 2:
            raise DimensionError(f"dense weights must be [d_out, d_in], got shape {params.weights.shape}")
        d_out = params.weights.shape[0]
        if params.bias.shape != (d_out,):
            raise DimensionError(
                f"dense bias axis: expected length {d_out}, got shape {params.bias.shape}"
            )
        self.params = params
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        w = self.params.weights.data
        if x.ndim != 2:
            raise DimensionError(f"dense input must be [batch, features], got rank {x.ndim}")
        if x.shape[1] != w.shape[1]:
            raise DimensionError(
                f"dense input axis: got {x.shape[1]} features, weights expect {w.shape[1]}"
            )
        self._x = x
        return x @ w.T + self.params.bias.data

    def backward(self, dout: np.ndarray) -> np.ndarray:
        self.params.weights.grad += dout.T @ self._x
        self.params.bias.grad += dout.sum(axis=0)
        return dout @ self.params.weights.data


class ReLU:
    """Elementwise max(0, x); gradient is 0 at x == 0."""

    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0.0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * self._mask


class Gate:
    """Sigmoid self-gate y = sigmoid(x) * x."""

    def __init__(self):
        self._x = None
        self._s = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        s = sigmoid(x)
        self._x = x
        self._s = s
        return s * x

    def backward(self, dout: np.ndarray) -> np.ndarray:
        # d/dx [s(x) * x] = s(x) * (1 + x * (1 - s(x)))
        return dout * self._s * (1.0 + self._x * (1.0 - self._s))


class Dropout:
    """Inverted dropout; identity when not training or when rate is 0."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ConfigurationError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate
        self._mult = None

    def forward(self, x: np.ndarray, training: bool, rng: np.random.Generator) -> np.ndarray:
        if not training or self.rate == 0.0:
            self._mult = None
            return x
        keep = rng.random(x.shape) >= self.rate
        self._mult = keep / (1.0 - self.rate)
        return x * self._mult

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mult is None:
            return dout
        return dout * self._mult
