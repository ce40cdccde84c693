"""Pricing models in divergence form.

Both models write their generator as ``-div(A grad u) + b . grad u`` on a box
domain; ``x`` is ``S`` for Black-Scholes and ``(S, V)`` for Heston.  Time is
time to maturity, so the payoff is the initial condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_STRIKE = 1.0
DEFAULT_RATE = 0.05
DEFAULT_MATURITY = 1.0
S_DOMAIN = (0.01, 3.0)
V_DOMAIN = (0.001, 0.1)


def bs_coefficients(S, sigma: float = 0.25, r: float = DEFAULT_RATE):
    """Diffusion ``a = sigma^2 S^2 / 2`` and drift ``b = (sigma^2 - r) S``."""
    S = np.asarray(S, dtype=float)
    return 0.5 * sigma**2 * S**2, (sigma**2 - r) * S


def heston_coefficients(S, V, r=DEFAULT_RATE, lam=2.0, kappa=0.01, eta=0.1, rho=0.0):
    """Divergence-form Heston coefficients.

    Returns ``A`` with shape ``(..., 2, 2)`` and ``b`` with shape ``(..., 2)``.
    ``lam`` is the mean-reversion speed, ``kappa`` the long-run variance and
    ``eta`` the volatility of variance.
    """
    S = np.asarray(S, dtype=float)
    V = np.asarray(V, dtype=float)
    S, V = np.broadcast_arrays(S, V)
    A = np.empty(S.shape + (2, 2))
    A[..., 0, 0] = 0.5 * S**2 * V
    A[..., 0, 1] = A[..., 1, 0] = 0.5 * rho * eta * S * V
    A[..., 1, 1] = 0.5 * eta**2 * V
    b = np.empty(S.shape + (2,))
    b[..., 0] = (-r + V + 0.5 * rho * eta) * S
    b[..., 1] = lam * (V - kappa) + 0.5 * eta**2 + 0.5 * rho * eta * V
    return A, b


def payoff(S, K: float = DEFAULT_STRIKE):
    """European call payoff ``(S - K)^+``."""
    return np.maximum(np.asarray(S, dtype=float) - K, 0.0)


def payoff_slope(S, K: float = DEFAULT_STRIKE):
    """Derivative of the call payoff; 0 at the kink ``S = K``."""
    return (np.asarray(S, dtype=float) > K).astype(float)


@dataclass(frozen=True)
class ModelSpec:
    """A pricing model on a box domain.

    Points are arrays of shape ``(M, dim)`` with ``S`` in column 0 (and ``V``
    in column 1 for Heston).
    """

    name: str = "black_scholes"
    r: float = DEFAULT_RATE
    T: float = DEFAULT_MATURITY
    K: float = DEFAULT_STRIKE
    sigma: float = 0.25
    lam: float = 2.0
    kappa: float = 0.01
    eta: float = 0.1
    rho: float = 0.0
    domain: tuple = field(default=())

    def __post_init__(self):
        if self.name not in ("black_scholes", "heston"):
            raise ValueError(f"unknown model {self.name!r}")
        if not self.domain:
            dom = (S_DOMAIN,) if self.name == "black_scholes" else (S_DOMAIN, V_DOMAIN)
            object.__setattr__(self, "domain", dom)
        dom = tuple(tuple(map(float, iv)) for iv in self.domain)
        if len(dom) != self.dim:
            raise ValueError(f"{self.name} needs {self.dim} domain intervals, got {len(dom)}")
        for lo, hi in dom:
            if not hi > lo:
                raise ValueError(f"empty domain interval [{lo}, {hi}]")
        object.__setattr__(self, "domain", dom)

    @property
    def dim(self) -> int:
        return 1 if self.name == "black_scholes" else 2

    @property
    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.domain]))

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.domain])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.domain])

    def with_(self, **kw) -> "ModelSpec":
        return replace(self, **kw)

    def coefficients(self, x):
        """``(A, b)`` at points ``x`` of shape ``(M, dim)``: ``A`` is ``(M, dim, dim)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.name == "black_scholes":
            a, b = bs_coefficients(x[:, 0], self.sigma, self.r)
            return a[:, None, None], b[:, None]
        return heston_coefficients(
            x[:, 0], x[:, 1], self.r, self.lam, self.kappa, self.eta, self.rho
        )

    def divergence_drift(self, x) -> np.ndarray:
        """``c_j = sum_i dA_ij/dx_i`` at ``x``, shape ``(M, dim)``.

        ``div(A grad u) = sum_ij A_ij u_ij + sum_j c_j u_j``.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.name == "black_scholes":
            return (self.sigma**2 * x[:, 0])[:, None]
        S, V = x[:, 0], x[:, 1]
        c = np.empty_like(x)
        c[:, 0] = S * V + 0.5 * self.rho * self.eta * S
        c[:, 1] = 0.5 * self.rho * self.eta * V + 0.5 * self.eta**2
        return c

    def payoff(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return payoff(x[:, 0], self.K)

    def payoff_grad(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = np.zeros_like(x)
        g[:, 0] = payoff_slope(x[:, 0], self.K)
        return g

    def describe(self) -> dict:
        out = {"name": self.name, "r": self.r, "T": self.T, "K": self.K}
        if self.name == "black_scholes":
            out["sigma"] = self.sigma
        else:
            out.update(lam=self.lam, kappa=self.kappa, eta=self.eta, rho=self.rho)
        out["domain"] = [list(iv) for iv in self.domain]
        return out


def black_scholes(**kw) -> ModelSpec:
    return ModelSpec(name="black_scholes", **kw)


def heston(**kw) -> ModelSpec:
    return ModelSpec(name="heston", **kw)


def sample_domain(spec: ModelSpec, count: int, seed=None, include_time: bool = False) -> np.ndarray:
    """I.i.d. uniform points on the domain, shape ``(count, dim[+1])``.

    ``seed`` may be an int or a ``numpy.random.Generator``; the time coordinate,
    when requested, is uniform on ``[0, T]`` and goes in the last column.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo, hi = spec.lower, spec.upper
    if include_time:
        lo = np.append(lo, 0.0)
        hi = np.append(hi, spec.T)
    return lo + (hi - lo) * rng.random((count, lo.size))
