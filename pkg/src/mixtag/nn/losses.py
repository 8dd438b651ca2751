"""Loss functions, elementwise, each returning (loss, d_loss/d_input).

Probabilities are clamped to [CLAMP_EPS, 1 - CLAMP_EPS] before any log, so
saturated sigmoids and softmaxes never produce infinities.
"""

from __future__ import annotations

import numpy as np

CLAMP_EPS = 1e-7


def bce_loss(p, y):
    """Binary cross-entropy on probabilities; y in {0, 1}."""
    p = np.clip(np.asarray(p), CLAMP_EPS, 1.0 - CLAMP_EPS)
    y = np.asarray(y, dtype=p.dtype)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = (p - y) / (p * (1.0 - p))
    return loss, grad


def cce_loss(p, y):
    """Categorical cross-entropy over the last axis.

    y may be one-hot (same shape as p) or integer class indices of shape
    p.shape[:-1].  Returns per-row losses and d_loss/d_p.
    """
    p = np.asarray(p)
    y = np.asarray(y)
    clamped = np.clip(p, CLAMP_EPS, 1.0)
    if y.shape == p.shape:
        onehot = y.astype(p.dtype)
    else:
        onehot = np.zeros_like(p)
        np.put_along_axis(onehot, y[..., None], 1.0, axis=-1)
    loss = -(onehot * np.log(clamped)).sum(axis=-1)
    grad = -onehot / clamped
    return loss, grad


def contrastive_loss(distance, y, margin: float):
    """Pairwise contrastive loss; y = 0 for same-class, 1 for cross-class.

    (1-y) * d^2 / 2  +  y * max(0, margin - d)^2 / 2
    """
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    d = np.asarray(distance)
    y = np.asarray(y, dtype=d.dtype)
    hinge = np.maximum(0.0, margin - d)
    loss = (1.0 - y) * 0.5 * d * d + y * 0.5 * hinge * hinge
    grad = (1.0 - y) * d - y * hinge
    return loss, grad


def embedding_distance(e1, e2, eps: float = 1e-6):
    """Stabilized euclidean distance between embeddings, over the last axis.

    sqrt(sum((e1 - e2)^2) + eps); strictly positive and symmetric in its
    arguments bit-for-bit.
    """
    e1 = np.asarray(e1)
    e2 = np.asarray(e2)
    if e1.shape != e2.shape:
        raise ValueError(f"embedding shapes differ: {e1.shape} vs {e2.shape}")
    diff = e1 - e2
    return np.sqrt((diff * diff).sum(axis=-1) + eps)
