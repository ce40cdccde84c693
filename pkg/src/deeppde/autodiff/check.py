"""Central finite-difference oracle for parameter gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tape import GradientTrace, Node, parameter_gradient


def finite_difference_check(
    f: Callable[[object], Node],
    theta,
    h: float = 1e-5,
    floor: float = 1e-8,
) -> float:
    """Max relative error between the traced gradient of ``f`` and central differences.

    ``f`` receives either a trace parameter Node or a plain array holding the
    full parameter vector and returns a scalar loss.  The relative error per
    coordinate is ``|g_ad - g_fd| / max(|g_ad|, |g_fd|, floor)``.  Losses with a
    derivative kink inside ``[theta - h, theta + h]`` are not meaningful here.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    theta = np.asarray(theta, dtype=float).ravel()
    trace = GradientTrace()
    ad = parameter_gradient(trace, f(trace.param(theta)))
    fd = np.empty_like(theta)
    for i in range(theta.size):
        tp = theta.copy()
        tm = theta.copy()
        tp[i] += h
        tm[i] -= h
        fd[i] = (float(np.asarray(f(tp))) - float(np.asarray(f(tm)))) / (2.0 * h)
    denom = np.maximum(np.maximum(np.abs(ad), np.abs(fd)), floor)
    return float(np.max(np.abs(ad - fd) / denom))
