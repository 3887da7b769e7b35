"""Finite-difference verification of the backward pass."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def gradient_check(build_loss, params: list[Tensor], eps: float = 1e-5,
                   max_entries_per_tensor: int | None = None, rng=None) -> float:
    """Compare backward gradients with central finite differences.

    build_loss must rerun the forward pass from current parameter values and
    return a scalar Tensor. Returns the worst relative error over all checked
    entries; the relative denominator is floored so near-zero gradients are
    compared absolutely.
    """
    for p in params:
        p.grad = None
    loss = build_loss()
    loss.backward()
    analytic = []
    for p in params:
        if p.grad is None:
            analytic.append(np.zeros_like(p.data))
        else:
            analytic.append(p.grad.copy())

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        aflat = a.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries_per_tensor is not None and flat.size > max_entries_per_tensor:
            gen = rng if rng is not None else np.random.default_rng(0)
            idx = gen.choice(flat.size, size=max_entries_per_tensor, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(build_loss().data)
            flat[i] = orig - eps
            lo = float(build_loss().data)
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            denom = max(abs(aflat[i]), abs(numeric), 1e-2)
            worst = max(worst, abs(aflat[i] - numeric) / denom)
    return worst
