"""Adam on flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass
class AdamState:
    size: int
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        return adam_step(self, params, grads)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One Adam update; returns new parameters and advances ``state`` in place."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.size != state.size:
        raise ValueError(f"length mismatch: params {params.shape}, grads {grads.shape}, state {state.size}")
    if not np.all(np.isfinite(grads)):
        bad = np.flatnonzero(~np.isfinite(grads))
        raise NonFiniteGradientError(
            f"non-finite gradient at step {state.step_count + 1}: {bad.size} entries, first index {bad[0]}"
        )
    if state.weight_decay:
        grads = grads + state.weight_decay * params
    state.step_count += 1
    b1, b2 = state.beta1, state.beta2
    state.m = b1 * state.m + (1.0 - b1) * grads
    state.v = b2 * state.v + (1.0 - b2) * grads * grads
    m_hat = state.m / (1.0 - b1**state.step_count)
    v_hat = state.v / (1.0 - b2**state.step_count)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
