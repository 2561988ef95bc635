"""Bias-corrected Adam, applied in place one layer at a time."""

import numpy as np

from .tensor import LayerParams


def adam_step(
    params: LayerParams,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One Adam update for a layer's weights and bias from their .grad buffers."""
    t = params.step_count + 1
    corr1 = 1.0 - beta1**t
    corr2 = 1.0 - beta2**t
    for tensor, m, v in zip(params.tensors(), params.adam_m, params.adam_v):
        g = tensor.grad
        # in-place with a single scratch buffer; this runs millions of times
        scratch = np.empty_like(g)
        np.multiply(m, beta1, out=m)
        np.multiply(g, 1.0 - beta1, out=scratch)
        np.add(m, scratch, out=m)
        np.multiply(v, beta2, out=v)
        np.multiply(g, g, out=scratch)
        np.multiply(scratch, 1.0 - beta2, out=scratch)
        np.add(v, scratch, out=v)
        np.divide(v, corr2, out=scratch)
        np.sqrt(scratch, out=scratch)
        np.add(scratch, eps, out=scratch)
        np.divide(m, scratch, out=scratch)
        np.multiply(scratch, lr / corr1, out=scratch)
        np.subtract(tensor.data, scratch, out=tensor.data)
    params.step_count = t
