"""Regression and distribution-alignment losses.

The alignment loss is the Bhattacharyya distance -log(sum_i sqrt(p_i * q_i))
between two discrete distributions. The coefficient under the log is clamped
to [1e-12, 1]: the floor keeps disjoint supports finite, the ceiling keeps
rounding noise from driving the distance negative. Inside the clamped regions
the gradient is defined to be zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, DomainError

BD_COEFF_FLOOR = 1e-12


@dataclass(frozen=True)
class LossBreakdown:
    """One training step's loss terms; total is exactly mse + alpha * bd."""

    mse: float
    bd: float
    alpha: float
    total: float

    @classmethod
    def combine(cls, mse: float, bd: float, alpha: float) -> "LossBreakdown":
        return cls(mse=mse, bd=bd, alpha=alpha, total=mse + alpha * bd)

    def as_dict(self) -> dict:
        return {"mse": self.mse, "bd": self.bd, "alpha": self.alpha, "total": self.total}


def _check_pair(pred: np.ndarray, target: np.ndarray, op: str) -> None:
    if pred.ndim != 1 or target.ndim != 1:
        raise DimensionError(f"{op} expects vectors, got ranks {pred.ndim} and {target.ndim}")
    if pred.shape != target.shape:
        raise DimensionError(f"{op} length axis: {pred.shape[0]} vs {target.shape[0]}")
    if pred.shape[0] < 1:
        raise DimensionError(f"{op} needs at least one element")


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_pair(pred, target, "mse_loss")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_with_grad(pred, target) -> tuple:
    """Mean squared error plus its gradient 2 * (pred - target) / n."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_pair(pred, target, "mse_loss")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.shape[0]


def _sqrt_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """sqrt(num / den) with zeros wherever den is below the clamp floor."""
    ratio = np.divide(num, den, out=np.zeros_like(num), where=den >= BD_COEFF_FLOOR)
    return np.sqrt(ratio)


def bhattacharyya_distance(p, q) -> float:
    """Distance between two non-negative vectors treated as distributions.

    Identical inputs return exactly 0 (a float distribution rarely sums to
    exactly 1, so the raw coefficient of a vector with itself lands a few ulp
    off 1; equality is the one case whose answer is known in closed form).
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or q.ndim != 1 or p.shape != q.shape:
        raise DimensionError(
            f"distributions must be equal-length vectors, got shapes {p.shape} and {q.shape}"
        )
    if np.any(p < 0.0) or np.any(q < 0.0):
        raise DomainError("distribution entries must be non-negative")
    if np.array_equal(p, q):
        return 0.0
    bc = float(np.sqrt(p * q).sum())
    return float(-np.log(min(max(bc, BD_COEFF_FLOOR), 1.0)))


def bhattacharyya_with_grads(p, q) -> tuple:
    """Distance plus its partials: dD/dp_i = -0.5 * sqrt(q_i / p_i) / BC.

    Entries below the clamp floor, and points where the coefficient itself is
    clamped, get zero gradient.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    value = bhattacharyya_distance(p, q)
    bc = float(np.sqrt(p * q).sum())
    if bc <= BD_COEFF_FLOOR or bc >= 1.0:
        return value, np.zeros_like(p), np.zeros_like(q)
    coeff = -0.5 / bc
    return value, coeff * _sqrt_ratio(q, p), coeff * _sqrt_ratio(p, q)


class BhattacharyyaAlign:
    """Rowwise distance between two matrices of distributions, with backward."""

    def __init__(self):
        self._p = None
        self._q = None
        self._bc_raw = None
        self._bc = None

    def forward(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        if p.shape != q.shape:
            raise DimensionError(f"distribution matrices differ in shape: {p.shape} vs {q.shape}")
        self._p = p
        self._q = q
        self._bc_raw = np.sqrt(p * q).sum(axis=1)
        self._bc = np.clip(self._bc_raw, BD_COEFF_FLOOR, 1.0)
        values = -np.log(self._bc)
        values[np.all(p == q, axis=1)] = 0.0  # same snap as the vector op
        return values

    def backward(self, dvals: np.ndarray) -> tuple:
        alive = (self._bc_raw > BD_COEFF_FLOOR) & (self._bc_raw < 1.0)
        coeff = np.where(alive, -0.5 / self._bc, 0.0) * dvals
        dp = coeff[:, None] * _sqrt_ratio(self._q, self._p)
        dq = coeff[:, None] * _sqrt_ratio(self._p, self._q)
        return dp, dq
