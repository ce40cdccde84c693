"""L2 errors on an equidistant grid and log-log convergence-rate fits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .models import ModelSpec


@dataclass(frozen=True)
class ErrorGrid:
    """Equidistant tensor grid (endpoints included) over a box domain."""

    coords: tuple
    time: float = 1.0

    @classmethod
    def for_model(cls, model: ModelSpec, points: int = 47, time: float | None = None) -> "ErrorGrid":
        if points < 2:
            raise ValueError("need at least two grid points per dimension")
        coords = tuple(np.linspace(lo, hi, points) for lo, hi in model.domain)
        return cls(coords, model.T if time is None else time)

    @property
    def volume(self) -> float:
        return float(np.prod([c[-1] - c[0] for c in self.coords]))

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.coords, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def l2_error(predict: Callable, reference: Callable, grid: ErrorGrid) -> float:
    """``sqrt(|Omega| * mean((predict - reference)^2))`` over the grid points.

    Both callables take an ``(M, dim)`` array and return ``M`` values.
    """
    pts = grid.points
    p = np.asarray(predict(pts), dtype=float).ravel()
    q = np.asarray(reference(pts), dtype=float).ravel()
    bad = ~np.isfinite(p)
    if bad.any():
        raise ValueError(f"non-finite prediction at grid point {pts[np.argmax(bad)].tolist()}")
    diff = p - q
    return float(np.sqrt(grid.volume * np.mean(diff * diff)))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_rate(param_values, errors) -> RateFit:
    """Least-squares line through ``(log10 param, log10 error)``."""
    x = np.asarray(param_values, dtype=float)
    y = np.asarray(errors, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ValueError("need at least three (parameter, error) pairs of equal length")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("rate fits need strictly positive parameters and errors")
    return fit_line(np.log10(x), np.log10(y))


def fit_line(x, y) -> RateFit:
    """Ordinary least squares ``y ~ slope * x + intercept``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least three points")
    res = stats.linregress(x, y)
    r2 = float(res.rvalue**2) if np.isfinite(res.rvalue) else 1.0
    return RateFit(float(res.slope), float(res.intercept), min(max(r2, 0.0), 1.0), int(x.size))
