"""Layer classes with explicit backward passes, plus network assembly.

Layers are stateless between calls: ``forward`` returns ``(output, cache)``
and ``backward(d_out, cache)`` returns the input gradient while accumulating
parameter gradients into the shared ParamStore.  Running two forward passes
before a backward pass is therefore safe, which is what twin (weight-shared)
networks rely on.

Parameter initialization: Glorot-uniform input kernels, orthogonal recurrent
kernels, zero biases, LSTM forget-gate bias 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mixtag.nn import activations
from mixtag.nn import functional as F
from mixtag.nn.params import ParamStore


def _glorot(rng, shape, dtype):
    fan_in, fan_out = shape[0], shape[-1]
    if len(shape) == 3:  # conv kernels (k, C_in, filters)
        fan_in = shape[0] * shape[1]
        fan_out = shape[2]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def _orthogonal_blocks(rng, n, blocks, dtype):
    """(n, blocks*n) matrix made of independent orthogonal n x n blocks."""
    cols = []
    for _ in range(blocks):
        a = rng.standard_normal((n, n))
        q, r = np.linalg.qr(a)
        cols.append(q * np.sign(np.diag(r)))
    return np.concatenate(cols, axis=1).astype(dtype)


class Dense:
    """Affine map on the last axis followed by an activation."""

    def __init__(self, store: ParamStore, name: str, n_in: int, n_out: int,
                 activation: str = "identity", rng=None):
        self.store = store
        self.name = name
        self.n_in = n_in
        self.n_out = n_out
        self.activation = activation
        store.add(f"{name}/W", _glorot(rng, (n_in, n_out), store.dtype))
        store.add(f"{name}/b", np.zeros(n_out, dtype=store.dtype))

    def forward(self, x, training=False, rng=None):
        w = self.store.value(f"{self.name}/W")
        b = self.store.value(f"{self.name}/b")
        out = activations.apply(self.activation, x @ w + b)
        return out, (x, out)

    def backward(self, d_out, cache):
        x, out = cache
        dz = activations.backprop(self.activation, out, d_out)
        flat_x = x.reshape(-1, self.n_in)
        flat_dz = dz.reshape(-1, self.n_out)
        self.store.add_grad(f"{self.name}/W", flat_x.T @ flat_dz)
        self.store.add_grad(f"{self.name}/b", flat_dz.sum(axis=0))
        return (flat_dz @ self.store.value(f"{self.name}/W").T).reshape(x.shape)


class Conv1D:
    """Valid 1-D convolution over (batch, T, C_in), stride fixed at 1."""

    def __init__(self, store: ParamStore, name: str, c_in: int, filters: int,
                 kernel: int, activation: str = "identity", rng=None):
        self.store = store
        self.name = name
        self.c_in = c_in
        self.filters = filters
        self.kernel = kernel
        self.activation = activation
        store.add(f"{name}/K", _glorot(rng, (kernel, c_in, filters), store.dtype))
        store.add(f"{name}/b", np.zeros(filters, dtype=store.dtype))

    def forward(self, x, training=False, rng=None):
        if x.shape[1] < self.kernel:
            raise ValueError(
                f"input length {x.shape[1]} shorter than kernel size {self.kernel}"
            )
        cols = F._im2col(x, self.kernel)
        kmat = self.store.value(f"{self.name}/K").reshape(-1, self.filters)
        out = activations.apply(
            self.activation, cols @ kmat + self.store.value(f"{self.name}/b")
        )
        return out, (cols, out, x.shape)

    def backward(self, d_out, cache):
        cols, out, x_shape = cache
        dz = activations.backprop(self.activation, out, d_out)
        k, c = self.kernel, self.c_in
        flat_cols = cols.reshape(-1, k * c)
        flat_dz = dz.reshape(-1, self.filters)
        self.store.add_grad(
            f"{self.name}/K", (flat_cols.T @ flat_dz).reshape(k, c, self.filters)
        )
        self.store.add_grad(f"{self.name}/b", flat_dz.sum(axis=0))
        kmat = self.store.value(f"{self.name}/K").reshape(-1, self.filters)
        d_cols = dz @ kmat.T  # (B, T_out, k*C)
        dx = np.zeros(x_shape, dtype=d_out.dtype)
        t_out = dz.shape[1]
        for j in range(k):
            dx[:, j : j + t_out] += d_cols[:, :, j * c : (j + 1) * c]
        return dx


class LSTM:
    """Stacked-friendly LSTM layer; emits the full sequence or the last state."""

    def __init__(self, store: ParamStore, name: str, c_in: int, hidden: int,
                 return_sequences: bool = False, rng=None):
        self.store = store
        self.name = name
        self.c_in = c_in
        self.hidden = hidden
        self.return_sequences = return_sequences
        store.add(f"{name}/W", _glorot(rng, (c_in, 4 * hidden), store.dtype))
        store.add(f"{name}/U", _orthogonal_blocks(rng, hidden, 4, store.dtype))
        bias = np.zeros(4 * hidden, dtype=store.dtype)
        bias[hidden : 2 * hidden] = 1.0  # forget gate opens at init
        store.add(f"{name}/b", bias)

    def forward(self, x, training=False, rng=None):
        w = self.store.value(f"{self.name}/W")
        u = self.store.value(f"{self.name}/U")
        b = self.store.value(f"{self.name}/b")
        h_seq, step_caches, (h_last, _) = F.lstm_scan(x, w, u, b)
        out = h_seq if self.return_sequences else h_last
        return out, (x, h_seq, step_caches)

    def backward(self, d_out, cache):
        x, h_seq, step_caches = cache
        u = self.store.value(f"{self.name}/U")
        w = self.store.value(f"{self.name}/W")
        b_sz, t, _ = x.shape
        hid = self.hidden
        d_pre = np.empty((b_sz, t, 4 * hid), dtype=d_out.dtype)
        dh = np.zeros((b_sz, hid), dtype=d_out.dtype)
        dc = np.zeros((b_sz, hid), dtype=d_out.dtype)
        if not self.return_sequences:
            dh += d_out
        for step in range(t - 1, -1, -1):
            if self.return_sequences:
                dh += d_out[:, step]
            i, f, g, o, c_prev, tc, _ = step_caches[step]
            do = dh * tc
            dtc = dh * o * (1.0 - tc * tc) + dc
            di = dtc * g
            df = dtc * c_prev
            dg = dtc * i
            dc = dtc * f
            dp = d_pre[:, step]
            dp[:, :hid] = di * i * (1.0 - i)
            dp[:, hid : 2 * hid] = df * f * (1.0 - f)
            dp[:, 2 * hid : 3 * hid] = dg * (1.0 - g * g)
            dp[:, 3 * hid :] = do * o * (1.0 - o)
            dh = dp @ u.T
        flat_dpre = d_pre.reshape(-1, 4 * hid)
        # h_prev over time = (0, h_0, ..., h_{T-2})
        h_prev = np.concatenate(
            [np.zeros((b_sz, 1, hid), dtype=h_seq.dtype), h_seq[:, :-1]], axis=1
        )
        self.store.add_grad(f"{self.name}/W", x.reshape(-1, self.c_in).T @ flat_dpre)
        self.store.add_grad(f"{self.name}/U", h_prev.reshape(-1, hid).T @ flat_dpre)
        self.store.add_grad(f"{self.name}/b", flat_dpre.sum(axis=0))
        return (flat_dpre @ w.T).reshape(x.shape)


class GRU:
    """Update/reset-gate recurrence; reset is applied before the matmul."""

    def __init__(self, store: ParamStore, name: str, c_in: int, hidden: int,
                 return_sequences: bool = False, rng=None):
        self.store = store
        self.name = name
        self.c_in = c_in
        self.hidden = hidden
        self.return_sequences = return_sequences
        store.add(f"{name}/W", _glorot(rng, (c_in, 3 * hidden), store.dtype))
        store.add(f"{name}/Uzr", _orthogonal_blocks(rng, hidden, 2, store.dtype))
        store.add(f"{name}/Un", _orthogonal_blocks(rng, hidden, 1, store.dtype))
        store.add(f"{name}/b", np.zeros(3 * hidden, dtype=store.dtype))

    def forward(self, x, training=False, rng=None):
        w = self.store.value(f"{self.name}/W")
        u_zr = self.store.value(f"{self.name}/Uzr")
        u_n = self.store.value(f"{self.name}/Un")
        b = self.store.value(f"{self.name}/b")
        h_seq, step_caches = F.gru_scan(x, w, u_zr, u_n, b)
        out = h_seq if self.return_sequences else h_seq[:, -1]
        return out, (x, h_seq, step_caches)

    def backward(self, d_out, cache):
        x, h_seq, step_caches = cache
        u_zr = self.store.value(f"{self.name}/Uzr")
        u_n = self.store.value(f"{self.name}/Un")
        w = self.store.value(f"{self.name}/W")
        b_sz, t, _ = x.shape
        hid = self.hidden
        d_pre = np.empty((b_sz, t, 3 * hid), dtype=d_out.dtype)
        dh = np.zeros((b_sz, hid), dtype=d_out.dtype)
        if not self.return_sequences:
            dh = dh + d_out
        for step in range(t - 1, -1, -1):
            if self.return_sequences:
                dh = dh + d_out[:, step]
            z, r, n, rh, h_prev = step_caches[step]
            dz = dh * (h_prev - n)
            dn = dh * (1.0 - z)
            dh_prev = dh * z
            dpre_n = dn * (1.0 - n * n)
            drh = dpre_n @ u_n.T
            dr = drh * h_prev
            dh_prev = dh_prev + drh * r
            dp = d_pre[:, step]
            dp[:, :hid] = dz * z * (1.0 - z)
            dp[:, hid : 2 * hid] = dr * r * (1.0 - r)
            dp[:, 2 * hid :] = dpre_n
            dh = dh_prev + dp[:, : 2 * hid] @ u_zr.T
        flat_dpre = d_pre.reshape(-1, 3 * hid)
        h_prev_seq = np.concatenate(
            [np.zeros((b_sz, 1, hid), dtype=h_seq.dtype), h_seq[:, :-1]], axis=1
        )
        rh_seq = np.stack([c[3] for c in step_caches], axis=1)
        self.store.add_grad(f"{self.name}/W", x.reshape(-1, self.c_in).T @ flat_dpre)
        self.store.add_grad(
            f"{self.name}/Uzr",
            h_prev_seq.reshape(-1, hid).T @ flat_dpre[:, : 2 * hid],
        )
        self.store.add_grad(
            f"{self.name}/Un", rh_seq.reshape(-1, hid).T @ flat_dpre[:, 2 * hid :]
        )
        self.store.add_grad(f"{self.name}/b", flat_dpre.sum(axis=0))
        return (flat_dpre @ w.T).reshape(x.shape)


class Dropout:
    """Inverted dropout; exact identity outside training."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, training=False, rng=None):
        out, keep = F.dropout_apply(x, self.rate, rng=rng, training=training)
        return out, keep

    def backward(self, d_out, cache):
        return d_out if cache is None else d_out * cache


class Flatten:
    """Collapse all trailing axes into one."""

    def forward(self, x, training=False, rng=None):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, d_out, cache):
        return d_out.reshape(cache)


@dataclass(frozen=True)
class LayerSpec:
    """Declarative description of one layer; the unit of model serialization."""

    kind: str  # dense | conv1d | lstm | gru | dropout | flatten
    size: int = 0
    filters: int = 0
    kernel: int = 0
    stride: int = 1
    rate: float = 0.0
    activation: str = "identity"
    return_sequences: bool = False

    def __post_init__(self):
        if self.kind not in ("dense", "conv1d", "lstm", "gru", "dropout", "flatten"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv1d" and self.stride != 1:
            raise ValueError("conv1d supports stride 1 only")
        if self.kind == "dropout" and not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")
        if self.activation not in activations.VALID:
            raise ValueError(f"unknown activation {self.activation!r}")


class Network:
    """A straight stack of layers over a shared ParamStore."""

    def __init__(self, store: ParamStore, layers: list):
        self.store = store
        self.layers = layers

    def forward(self, x, training=False, rng=None):
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x, training=training, rng=rng)
            caches.append(cache)
        return x, caches

    def backward(self, d_out, caches):
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            d_out = layer.backward(d_out, cache)
        return d_out

    def predict(self, x):
        out, _ = self.forward(x, training=False)
        return out


def build_network(store: ParamStore, specs: list[LayerSpec], input_shape,
                  rng, prefix: str = "") -> Network:
    """Assemble a Network from LayerSpecs, inferring every input width.

    input_shape is (T, C) for sequence inputs or (n,) for flat ones; shapes
    are threaded through the stack so each layer registers correctly sized
    parameters.
    """
    shape = tuple(input_shape)
    layers = []
    for idx, spec in enumerate(specs):
        name = f"{prefix}{idx:02d}_{spec.kind}"
        if spec.kind == "dense":
            layer = Dense(store, name, shape[-1], spec.size, spec.activation, rng)
            shape = shape[:-1] + (spec.size,)
        elif spec.kind == "conv1d":
            if len(shape) != 2:
                raise ValueError("conv1d needs (T, C) input")
            layer = Conv1D(store, name, shape[-1], spec.filters, spec.kernel,
                           spec.activation, rng)
            shape = (shape[0] - spec.kernel + 1, spec.filters)
        elif spec.kind in ("lstm", "gru"):
            if len(shape) != 2:
                raise ValueError(f"{spec.kind} needs (T, C) input")
            cls = LSTM if spec.kind == "lstm" else GRU
            layer = cls(store, name, shape[-1], spec.size,
                        return_sequences=spec.return_sequences, rng=rng)
            shape = (shape[0], spec.size) if spec.return_sequences else (spec.size,)
        elif spec.kind == "dropout":
            layer = Dropout(spec.rate)
        elif spec.kind == "flatten":
            layer = Flatten()
            shape = (int(np.prod(shape)),)
        else:  # pragma: no cover - guarded by LayerSpec validation
            raise ValueError(spec.kind)
        layers.append(layer)
    return Network(store, layers)
