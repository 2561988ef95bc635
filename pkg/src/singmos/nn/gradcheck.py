"""Central-difference gradient checking."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

# Maps inputs -> (scalar value, analytic gradients aligned with the inputs).
GradFn = Callable[[Sequence[np.ndarray]], tuple]


def grad_check(f: GradFn, inputs: Sequence[np.ndarray], h: float = 1e-5) -> float:
    """Worst relative disagreement between analytic and numeric gradients.

    Each input coordinate is nudged by +/-h in turn and f re-evaluated; the
    per-coordinate error is |analytic - numeric| / max(1, |analytic| + |numeric|).
    Inputs are perturbed in place and restored, so they must be float64 arrays.
    """
    _, grads = f(inputs)
    worst = 0.0
    for arr, grad in zip(inputs, grads):
        flat = arr.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            up, _ = f(inputs)
            flat[i] = saved - h
            down, _ = f(inputs)
            flat[i] = saved
            numeric = (up - down) / (2.0 * h)
            err = abs(gflat[i] - numeric) / max(1.0, abs(gflat[i]) + abs(numeric))
            worst = max(worst, err)
    return worst
