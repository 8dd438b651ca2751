"""Finite-difference verification of analytic gradients.

Central differences (f(w+eps) - f(w-eps)) / (2 eps) per parameter entry,
compared to the backward pass's gradient.  Callers are expected to build the
checked network with a float64 ParamStore and keep dropout out of training
mode, so the only error left is the O(eps^2) truncation term.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from mixtag.nn.params import ParamStore


def grad_check(store: ParamStore, loss_fn: Callable[[], float],
               grad_fn: Callable[[], None], eps: float = 1e-3) -> float:
    """Max over parameters of |analytic - numeric| / max(|a|, |n|, 1e-8).

    loss_fn() evaluates the loss at the current parameter values with no
    side effects; grad_fn() zeroes and repopulates the store's gradients.
    """
    base = loss_fn()
    if not np.isfinite(base):
        raise FloatingPointError(f"loss is not finite: {base}")
    store.zero_grads()
    grad_fn()
    analytic = {name: store.grad(name).copy() for name in store.names()}
    worst = 0.0
    for name, value in store.items():
        flat = value.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            plus = loss_fn()
            flat[idx] = orig - eps
            minus = loss_fn()
            flat[idx] = orig
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise FloatingPointError(f"loss not finite while perturbing {name!r}")
            numeric = (plus - minus) / (2.0 * eps)
            err = abs(a_flat[idx] - numeric) / max(abs(a_flat[idx]), abs(numeric), 1e-8)
            if err > worst:
                worst = err
    return worst
