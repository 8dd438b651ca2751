"""Activation functions and their backward rules.

Backward rules are expressed in terms of the forward *output* where possible
(sigmoid, tanh, relu), which avoids caching pre-activations.
"""

from __future__ import annotations

import numpy as np

def sigmoid(x: np.ndarray) -> np.ndarray:
    # exp overflow only happens where the true value rounds to 0 anyway
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis, max-shifted for stability."""
    shifted = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def apply(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "sigmoid":
        return sigmoid(z)
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "softmax":
        return softmax(z)
    raise ValueError(f"unknown activation {name!r}")


def backprop(name: str, out: np.ndarray, d_out: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the pre-activation, given output and its gradient."""
    if name == "identity":
        return d_out
    if name == "sigmoid":
        return d_out * out * (1.0 - out)
    if name == "tanh":
        return d_out * (1.0 - out * out)
    if name == "relu":
        return d_out * (out > 0.0)
    if name == "softmax":
        inner = np.sum(d_out * out, axis=-1, keepdims=True)
        return out * (d_out - inner)
    raise ValueError(f"unknown activation {name!r}")


VALID = ("identity", "sigmoid", "tanh", "relu", "softmax")
