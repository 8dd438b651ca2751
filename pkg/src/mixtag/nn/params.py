"""Named parameter storage shared by all networks.

A ParamStore maps names to (value, gradient) array pairs and owns the
optimizer's per-parameter state.  Layers register parameters here and read
them back on every forward pass, so twin networks that share a store share
weights exactly (same arrays, not copies).
"""

from __future__ import annotations

import numpy as np


class ParamStore:
    """Parameter tensors, their gradients, and optimizer state."""

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._values: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}
        self.optimizer_state: dict[str, dict[str, np.ndarray]] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self._values:
            raise ValueError(f"parameter {name!r} already registered")
        arr = np.ascontiguousarray(value, dtype=self.dtype)
        self._values[name] = arr
        self._grads[name] = np.zeros_like(arr)
        return arr

    def value(self, name: str) -> np.ndarray:
        return self._values[name]

    def grad(self, name: str) -> np.ndarray:
        return self._grads[name]

    def set_value(self, name: str, value) -> None:
        arr = np.asarray(value, dtype=self.dtype)
        if arr.shape != self._values[name].shape:
            raise ValueError(
                f"shape mismatch for {name!r}: {arr.shape} vs {self._values[name].shape}"
            )
        self._values[name][...] = arr

    def add_grad(self, name: str, grad: np.ndarray) -> None:
        g = self._grads[name]
        if np.shape(grad) != g.shape:
            raise ValueError(
                f"gradient shape mismatch for {name!r}: {np.shape(grad)} vs {g.shape}"
            )
        g += grad

    def zero_grads(self) -> None:
        for g in self._grads.values():
            g[...] = 0.0

    def names(self) -> list[str]:
        return list(self._values)

    def items(self):
        return self._values.items()

    def grads(self) -> dict[str, np.ndarray]:
        return dict(self._grads)

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self._values.values())

    def copy_values_from(self, other: "ParamStore") -> None:
        """Overwrite values with another store's (names must match)."""
        if set(other.names()) != set(self.names()):
            raise ValueError("parameter name sets differ")
        for name, value in other.items():
            self.set_value(name, value)

    def state_arrays(self, name: str) -> dict[str, np.ndarray]:
        """Optimizer moment arrays for one entry, created on first use."""
        return self.optimizer_state.setdefault(name, {})
