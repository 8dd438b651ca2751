"""Parameter updates: Adam, Nadam, RMSprop, and the L2 weight penalty.

Hyperparameters are fixed here rather than deferred to any framework:
Adam/Nadam use beta1=0.9, beta2=0.999, eps=1e-7 with bias correction (Nadam
adds Nesterov momentum); RMSprop uses rho=0.9 and eps=1e-7 inside the root.
Gradients are left untouched by the step; the caller zeroes them.
"""

from __future__ import annotations

import numpy as np

from mixtag.nn.params import ParamStore

BETA1 = 0.9
BETA2 = 0.999
RHO = 0.9
EPS = 1e-7

KINDS = ("adam", "nadam", "rmsprop")


class DivergedError(RuntimeError):
    """Raised when a gradient goes non-finite during optimization."""


def optimizer_step(store: ParamStore, kind: str, lr: float) -> None:
    """Apply one update of the chosen optimizer to every parameter."""
    if kind not in KINDS:
        raise ValueError(f"unknown optimizer {kind!r}")
    store.step_count += 1
    t = store.step_count
    for name in store.names():
        g = store.grad(name)
        if not np.all(np.isfinite(g)):
            raise DivergedError(
                f"non-finite gradient in {name!r} at step {t} "
                f"(|g|_max={np.abs(g[np.isfinite(g)]).max() if np.isfinite(g).any() else 'n/a'})"
            )
        value = store.value(name)
        state = store.state_arrays(name)
        if kind == "rmsprop":
            v = state.setdefault("v", np.zeros_like(value))
            v *= RHO
            v += (1.0 - RHO) * g * g
            value -= lr * g / np.sqrt(v + EPS)
        else:
            m = state.setdefault("m", np.zeros_like(value))
            v = state.setdefault("v", np.zeros_like(value))
            m *= BETA1
            m += (1.0 - BETA1) * g
            v *= BETA2
            v += (1.0 - BETA2) * g * g
            m_hat = m / (1.0 - BETA1**t)
            v_hat = v / (1.0 - BETA2**t)
            if kind == "adam":
                update = m_hat
            else:  # nadam: Nesterov look-ahead on the corrected momentum
                update = BETA1 * m_hat + (1.0 - BETA1) * g / (1.0 - BETA1**t)
            value -= lr * update / (np.sqrt(v_hat) + EPS)


def l2_penalty(store: ParamStore, weight_decay: float) -> float:
    """Add 2*wd*w to every weight gradient; return the wd*sum(w^2) loss term.

    Bias vectors (names ending in "/b") are excluded, as usual for decay.
    """
    if weight_decay < 0:
        raise ValueError(f"weight decay must be >= 0, got {weight_decay}")
    if weight_decay == 0.0:
        return 0.0
    total = 0.0
    for name, value in store.items():
        if name.endswith("/b"):
            continue
        total += float((value.astype(np.float64) ** 2).sum())
        store.add_grad(name, 2.0 * weight_decay * value)
    return weight_decay * total
