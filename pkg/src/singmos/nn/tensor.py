"""Dense float64 tensors with explicit gradient buffers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError


class Tensor:
    """A row-major float64 array paired with a same-shape gradient buffer."""

    __slots__ = ("data", "grad")

    def __init__(self, data, grad=None):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            grad = np.ascontiguousarray(grad, dtype=np.float64)
            if grad.shape != self.data.shape:
                raise DimensionError(
                    f"grad shape {grad.shape} does not match data shape {self.data.shape}"
                )
            self.grad = grad

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy(), self.grad.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={tuple(self.shape)})"


@dataclass
class LayerParams:
    """Trainable weights and bias plus per-tensor Adam moment estimates."""

    weights: Tensor
    bias: Tensor
    adam_m: list
    adam_v: list
    step_count: int = 0

    @classmethod
    def create(cls, weights, bias) -> "LayerParams":
        w = Tensor(weights)
        b = Tensor(bias)
        return cls(
            weights=w,
            bias=b,
            adam_m=[np.zeros_like(w.data), np.zeros_like(b.data)],
            adam_v=[np.zeros_like(w.data), np.zeros_like(b.data)],
        )

    def tensors(self) -> tuple:
        return (self.weights, self.bias)

    def zero_grad(self) -> None:
        self.weights.zero_grad()
        self.bias.zero_grad()

    @property
    def size(self) -> int:
        return self.weights.size + self.bias.size
