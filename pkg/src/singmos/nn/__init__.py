"""Differentiable numeric primitives: tensors, layers, losses, Adam, grad checks."""

from .functional import sigmoid, softmax, softmax_vjp
from .gradcheck import grad_check
from .layers import Conv1d, Dense, Dropout, Gate, MaxPool1d, ReLU
from .losses import (
    BD_COEFF_FLOOR,
    BhattacharyyaAlign,
    LossBreakdown,
    bhattacharyya_distance,
    bhattacharyya_with_grads,
    mse_loss,
    mse_loss_with_grad,
)
from .optim import adam_step
from .tensor import LayerParams, Tensor

__all__ = [
    "BD_COEFF_FLOOR",
    "BhattacharyyaAlign",
    "Conv1d",
    "Dense",
    "Dropout",
    "Gate",
    "LayerParams",
    "LossBreakdown",
    "MaxPool1d",
    "ReLU",
    "Tensor",
    "adam_step",
    "bhattacharyya_distance",
    "bhattacharyya_with_grads",
    "grad_check",
    "mse_loss",
    "mse_loss_with_grad",
    "sigmoid",
    "softmax",
    "softmax_vjp",
]
