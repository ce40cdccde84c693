"""Reference prices: closed-form Black-Scholes, Heston via COS, Heston Monte Carlo."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .models import ModelSpec


def norm_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / np.sqrt(2.0))


def bs_exact(t, S, K: float = 1.0, r: float = 0.05, sigma: float = 0.25):
    """Black-Scholes call price at time to maturity ``t``; the payoff at ``t = 0``."""
    t, S = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(S, dtype=float))
    scalar = t.ndim == 0
    t, S = np.atleast_1d(t), np.atleast_1d(S)
    out = np.maximum(S - K, 0.0)
    live = t > 0
    if np.any(live):
        tl, Sl = t[live], S[live]
        sq = sigma * np.sqrt(tl)
        with np.errstate(divide="ignore"):
            d1 = (np.log(Sl / K) + (r + 0.5 * sigma**2) * tl) / sq
        d2 = d1 - sq
        out[live] = Sl * norm_cdf(d1) - K * np.exp(-r * tl) * norm_cdf(d2)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class CosConfig:
    terms: int = 256
    width: float = 12.0

    def __post_init__(self):
        if self.terms < 16:
            raise ValueError("COS needs at least 16 terms")
        if self.width <= 0:
            raise ValueError("truncation width must be positive")


def _clog1p_over(z):
    """``log(1 + z) / z`` for complex ``z``, accurate near 0 (value 1 at z = 0)."""
    z = np.asarray(z, dtype=complex)
    re, im = z.real, z.imag
    logmod = 0.5 * np.log1p(2.0 * re + re * re + im * im)
    val = logmod + 1j * np.arctan2(im, 1.0 + re)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - 0.5 * z, val / safe)


def heston_charfn(u, t: float, V0, model: ModelSpec):
    """Characteristic function of ``log(S_t / S_0)`` under the Heston model.

    Uses the branch-stable ("little trap") form, rearranged so that no term
    divides by the variance volatility: the model stays well defined as
    ``eta -> 0``.
    """
    u = np.asarray(u, dtype=complex)
    lam, kappa, eta, rho, r = model.lam, model.kappa, model.eta, model.rho, model.r
    beta = lam - 1j * rho * eta * u
    w = u * u + 1j * u
    D = np.sqrt(beta * beta + eta * eta * w)
    # (beta - D) / eta^2 without cancellation
    q = -w / (beta + D)
    G_over = q / (beta + D)  # G / eta^2
    G = eta * eta * G_over
    e = np.exp(-D * t)
    one_minus_e = -np.expm1(-D * t)
    z_over = G_over * one_minus_e / (1.0 - G)  # z / eta^2, log term is log(1 + z)
    z = eta * eta * z_over
    log_term_over = z_over * _clog1p_over(z)
    C = lam * kappa * (q * t - 2.0 * log_term_over)
    Dterm = V0 * q * one_minus_e / (1.0 - G * e)
    return np.exp(1j * u * r * t + C + Dterm)


def _heston_cumulants(t: float, V0, model: ModelSpec):
    """First two cumulants of ``log(S_t / S_0)``."""
    lam, ubar, eta, rho, r = model.lam, model.kappa, model.eta, model.rho, model.r
    V0 = np.asarray(V0, dtype=float)
    e1 = np.exp(-lam * t)
    c1 = r * t + (1.0 - e1) * (ubar - V0) / (2.0 * lam) - 0.5 * ubar * t
    c2 = (1.0 / (8.0 * lam**3)) * (
        eta * t * lam * e1 * (V0 - ubar) * (8.0 * lam * rho - 4.0 * eta)
        + lam * rho * eta * (1.0 - e1) * (16.0 * ubar - 8.0 * V0)
        + 2.0 * ubar * lam * t * (-4.0 * lam * rho * eta + eta**2 + 4.0 * lam**2)
        + eta**2 * ((ubar - 2.0 * V0) * np.exp(-2.0 * lam * t) + ubar * (6.0 * e1 - 7.0) + 2.0 * V0)
        + 8.0 * lam**2 * (V0 - ubar) * (1.0 - e1)
    )
    return c1, np.abs(c2)


def _chi_psi(k, c, d, a, b):
    """Cosine coefficients of ``e^y`` and ``1`` on ``[c, d]`` for the interval ``[a, b]``."""
    w = k * np.pi / (b - a)
    chi = (
        np.cos(w * (d - a)) * np.exp(d)
        - np.cos(w * (c - a)) * np.exp(c)
        + w * np.sin(w * (d - a)) * np.exp(d)
        - w * np.sin(w * (c - a)) * np.exp(c)
    ) / (1.0 + w * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.where(k == 0, d - c, (np.sin(w * (d - a)) - np.sin(w * (c - a))) / np.where(k == 0, 1.0, w))
    return chi, psi


def heston_cos(t, S, V, model: ModelSpec, cfg: CosConfig | None = None):
    """European call under Heston by Fourier-cosine expansion.

    Prices the put on a cumulant-truncated interval around ``log(S/K) + c1``
    and recovers the call by put-call parity.  ``S`` may be an array;
    ``V`` and ``t`` are scalars.
    """
    cfg = cfg or CosConfig()
    if t <= 0:
        raise ValueError("COS pricing needs t > 0; use the payoff at t = 0")
    K, r = model.K, model.r
    S = np.atleast_1d(np.asarray(S, dtype=float))
    x = np.log(S / K)
    c1, c2 = _heston_cumulants(t, V, model)
    half = cfg.width * np.sqrt(c2)
    a = x + c1 - half
    b = x + c1 + half
    if not np.all(b > a):
        raise ValueError("degenerate COS truncation interval")
    k = np.arange(cfg.terms)
    phi = heston_charfn(k[None, :] * np.pi / (b - a)[:, None], t, V, model)
    upper = np.minimum(b, 0.0)
    chi, psi = _chi_psi(k[None, :], a[:, None], upper[:, None], a[:, None], b[:, None])
    Vk = 2.0 / (b - a)[:, None] * K * (psi - chi)
    Vk = np.where((a < 0.0)[:, None], Vk, 0.0)
    terms = np.real(phi * np.exp(1j * k[None, :] * np.pi * (x - a)[:, None] / (b - a)[:, None])) * Vk
    terms[:, 0] *= 0.5
    put = np.exp(-r * t) * terms.sum(axis=1)
    call = put + S - K * np.exp(-r * t)
    return call if call.size > 1 else float(call[0])


def heston_mc(t: float, S: float, V: float, model: ModelSpec, paths: int = 1_000_000,
              steps: int | None = None, seed: int = 0, chunk: int = 250_000):
    """Full-truncation Euler Monte Carlo for the Heston call.

    The log-price takes Euler steps with the truncated variance ``V^+``.
    Returns ``(price, standard_error)``; deterministic in ``seed``.
    """
    if paths < 1000:
        raise ValueError("need at least 1000 paths")
    steps = steps if steps is not None else max(1, int(round(250 * t)))
    dt = t / steps
    lam, kappa, eta, rho, r, K = model.lam, model.kappa, model.eta, model.rho, model.r, model.K
    rho_c = np.sqrt(1.0 - rho * rho)
    ss = np.random.SeedSequence(seed)
    total = total_sq = 0.0
    done = 0
    for sub in ss.spawn((paths + chunk - 1) // chunk):
        n = min(chunk, paths - done)
        rng = np.random.default_rng(sub)
        logS = np.full(n, np.log(S))
        v = np.full(n, float(V))
        sqdt = np.sqrt(dt)
        for _ in range(steps):
            z1 = rng.standard_normal(n)
            z2 = rng.standard_normal(n)
            vp = np.maximum(v, 0.0)
            sv = np.sqrt(vp)
            logS += (r - 0.5 * vp) * dt + sv * sqdt * z1
            v = v + lam * (kappa - vp) * dt + eta * sv * sqdt * (rho * z1 + rho_c * z2)
        disc = np.exp(-r * t) * np.maximum(np.exp(logS) - K, 0.0)
        total += disc.sum()
        total_sq += (disc * disc).sum()
        done += n
    mean = total / paths
    var = max(total_sq / paths - mean * mean, 0.0) * paths / (paths - 1)
    return mean, float(np.sqrt(var / paths))


def reference_price(model: ModelSpec, t: float, points, cos: CosConfig | None = None) -> np.ndarray:
    """Reference prices at ``points`` (shape ``(M, dim)``) and time to maturity ``t``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if model.name == "black_scholes":
        return np.asarray(bs_exact(t, points[:, 0], model.K, model.r, model.sigma), dtype=float)
    if t <= 0:
        return model.payoff(points)
    out = np.empty(len(points))
    for V in np.unique(points[:, 1]):
        sel = points[:, 1] == V
        out[sel] = heston_cos(t, points[sel, 0], float(V), model, cos)
    return out
