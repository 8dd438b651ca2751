"""Pure forward kernels for every layer kind.

These functions carry the numerical definitions; the layer classes in
``layers.py`` wrap them with parameter registration and backward passes.
All kernels accept a single sample (leading batch axis absent) or a batch.
"""

from __future__ import annotations

import numpy as np

from mixtag.nn import activations


def dense_forward(x, weights, bias, activation: str = "identity") -> np.ndarray:
    """act(x @ weights + bias); weights has shape (n_in, n_out).

    x may be (n_in,), (batch, n_in) or any (..., n_in) stack.
    """
    x = np.asarray(x)
    weights = np.asarray(weights)
    if x.shape[-1] != weights.shape[0]:
        raise ValueError(
            f"dense input width {x.shape[-1]} does not match weights {weights.shape}"
        )
    return activations.apply(activation, x @ weights + bias)


def conv1d_forward(seq, kernels, bias, activation: str = "identity") -> np.ndarray:
    """Valid 1-D convolution, stride 1.

    seq: (T, C_in) or (batch, T, C_in); kernels: (k, C_in, filters).
    Output has time length T - k + 1.
    """
    seq = np.asarray(seq)
    kernels = np.asarray(kernels)
    k, c_in, n_filters = kernels.shape
    single = seq.ndim == 2
    if single:
        seq = seq[None]
    if seq.shape[-1] != c_in:
        raise ValueError(f"conv input channels {seq.shape[-1]} != kernel channels {c_in}")
    t = seq.shape[1]
    if t < k:
        raise ValueError(f"input length {t} shorter than kernel size {k}")
    cols = _im2col(seq, k)  # (batch, T-k+1, k*C_in)
    out = cols @ kernels.reshape(k * c_in, n_filters) + bias
    out = activations.apply(activation, out)
    return out[0] if single else out


def _im2col(seq: np.ndarray, k: int) -> np.ndarray:
    """(batch, T, C) -> (batch, T-k+1, k*C) sliding windows."""
    b, t, c = seq.shape
    t_out = t - k + 1
    windows = np.stack([seq[:, j : j + t_out] for j in range(k)], axis=2)
    return windows.reshape(b, t_out, k * c)


def lstm_forward(seq, w_in, w_rec, bias, return_state: bool = False):
    """Standard LSTM with forget/input/output gates; gate packing i|f|g|o.

    seq: (T, C) or (batch, T, C); w_in: (C, 4H); w_rec: (H, 4H); bias: (4H,).
    Returns the full hidden sequence (..., T, H), plus (h_T, c_T) when
    return_state is set.
    """
    seq = np.asarray(seq)
    single = seq.ndim == 2
    if single:
        seq = seq[None]
    h_seq, _, (h, c) = lstm_scan(seq, w_in, w_rec, bias)
    if single:
        h_seq, h, c = h_seq[0], h[0], c[0]
    return (h_seq, (h, c)) if return_state else h_seq


def lstm_scan(seq, w_in, w_rec, bias):
    """Batched LSTM recurrence keeping per-step caches for backprop.

    Returns (h_seq, caches, (h_T, c_T)); caches holds the gate activations
    and cell states each step's backward rule needs.
    """
    w_in = np.asarray(w_in)
    w_rec = np.asarray(w_rec)
    b, t, _ = seq.shape
    hidden = w_rec.shape[0]
    if w_in.shape[1] != 4 * hidden or bias.shape[0] != 4 * hidden:
        raise ValueError("LSTM parameter shapes inconsistent")
    x_proj = seq.reshape(b * t, -1) @ w_in
    x_proj = x_proj.reshape(b, t, 4 * hidden) + bias
    h = np.zeros((b, hidden), dtype=x_proj.dtype)
    c = np.zeros((b, hidden), dtype=x_proj.dtype)
    h_seq = np.empty((b, t, hidden), dtype=x_proj.dtype)
    caches = []
    for step in range(t):
        pre = x_proj[:, step] + h @ w_rec
        i = activations.sigmoid(pre[:, :hidden])
        f = activations.sigmoid(pre[:, hidden : 2 * hidden])
        g = np.tanh(pre[:, 2 * hidden : 3 * hidden])
        o = activations.sigmoid(pre[:, 3 * hidden :])
        c_prev = c
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h_prev = h
        h = o * tc
        h_seq[:, step] = h
        caches.append((i, f, g, o, c_prev, tc, h_prev))
    return h_seq, caches, (h, c)


def gru_forward(seq, w_in, w_rec_zr, w_rec_n, bias):
    """Standard GRU (update/reset gates, reset applied before the matmul).

    seq: (T, C) or (batch, T, C); w_in: (C, 3H) packed z|r|n;
    w_rec_zr: (H, 2H); w_rec_n: (H, H); bias: (3H,).
    h_t = z*h_{t-1} + (1-z)*n, so an update gate of 1 carries state through.
    """
    seq = np.asarray(seq)
    single = seq.ndim == 2
    if single:
        seq = seq[None]
    h_seq, _ = gru_scan(seq, w_in, w_rec_zr, w_rec_n, bias)
    return h_seq[0] if single else h_seq


def gru_scan(seq, w_in, w_rec_zr, w_rec_n, bias):
    """Batched GRU recurrence keeping per-step caches for backprop."""
    w_in = np.asarray(w_in)
    b, t, _ = seq.shape
    hidden = w_rec_n.shape[0]
    if w_in.shape[1] != 3 * hidden or bias.shape[0] != 3 * hidden:
        raise ValueError("GRU parameter shapes inconsistent")
    x_proj = seq.reshape(b * t, -1) @ w_in
    x_proj = x_proj.reshape(b, t, 3 * hidden) + bias
    h = np.zeros((b, hidden), dtype=x_proj.dtype)
    h_seq = np.empty((b, t, hidden), dtype=x_proj.dtype)
    caches = []
    for step in range(t):
        pre_zr = x_proj[:, step, : 2 * hidden] + h @ w_rec_zr
        z = activations.sigmoid(pre_zr[:, :hidden])
        r = activations.sigmoid(pre_zr[:, hidden:])
        rh = r * h
        n = np.tanh(x_proj[:, step, 2 * hidden :] + rh @ w_rec_n)
        h_prev = h
        h = z * h_prev + (1.0 - z) * n
        h_seq[:, step] = h
        caches.append((z, r, n, rh, h_prev))
    return h_seq, caches


def dropout_apply(x, rate: float, rng=None, training: bool = False):
    """Inverted dropout: identity at inference, mask+rescale in training."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = np.asarray(x)
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    keep = keep.astype(x.dtype)
    return x * keep, keep
