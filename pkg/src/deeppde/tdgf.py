"""Time deep gradient flow: one energy minimisation per implicit time step.

Step ``k`` trains a network ``f^k`` to minimise the Monte Carlo energy

    |Omega|/(2M) sum (f^k + sum_j alpha_j U^{k-j})^2
      + beta h |Omega|/M sum [ (grad f^k . A grad f^k + r (f^k)^2) / 2
                               + (b . sum_j gamma_j grad U^{k-j}) f^k ]

whose minimiser is one BDF1 (order 1) or BDF2 (order 2) step of the pricing
PDE.  History terms are evaluated frozen; only ``f^k`` carries gradients.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .autodiff import GradientTrace, Jet, constant_jet, lift_input, parameter_gradient, square
from .autodiff.tape import reduce_sum
from .models import ModelSpec, sample_domain
from .network import NetworkParams, init_params, load_params, save_params
from .optimizer import AdamState, NonFiniteGradientError

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """A training run produced a non-finite loss or gradient."""


@dataclass(frozen=True)
class SchemeCoefficients:
    order: int
    alpha: tuple
    beta: float
    gamma: tuple


SCHEMES = {
    1: SchemeCoefficients(1, (-1.0,), 1.0, (1.0,)),
    2: SchemeCoefficients(2, (-4.0 / 3.0, 1.0 / 3.0), 2.0 / 3.0, (2.0, -1.0)),
}


def scheme_coefficients(order: int) -> SchemeCoefficients:
    try:
        return SCHEMES[order]
    except KeyError:
        raise ValueError(f"discretisation order must be 1 or 2, got {order}") from None


class PayoffSolution:
    """``U^0``: the exact payoff, not a network."""

    k = 0
    t = 0.0

    def __init__(self, model: ModelSpec):
        self.model = model

    def jet(self, points, order: int = 1) -> Jet:
        points = np.atleast_2d(points)
        d = points.shape[1]
        data = np.zeros((1 + (d if order >= 1 else 0),) + points.shape[:1])
        data[0] = self.model.payoff(points)
        if order >= 1:
            data[1:] = self.model.payoff_grad(points).T
        return Jet(data, d, min(order, 1))

    def __call__(self, points) -> np.ndarray:
        return self.model.payoff(points)


@dataclass(frozen=True)
class StepSolution:
    """Frozen network approximating the price at time step ``k`` (time ``t``)."""

    k: int
    t: float
    params: NetworkParams

    def jet(self, points, order: int = 1) -> Jet:
        return self.params(lift_input(np.atleast_2d(points), order))

    def __call__(self, points) -> np.ndarray:
        return self.jet(points, order=0).value


def tdgf_loss(
    order: int,
    candidate: Callable[[Jet], Jet],
    history: Sequence,
    batch: np.ndarray,
    h: float,
    model: ModelSpec,
):
    """Discretised energy for one time step.

    ``candidate`` maps a lifted batch to the (traced) output jet of ``f^k``;
    ``history[j-1]`` is ``U^{k-j}`` and must expose ``jet(points, order)``.
    """
    coeffs = scheme_coefficients(order)
    if len(history) < order:
        raise ValueError(f"order {order} needs {order} history steps, got {len(history)}")
    if h <= 0:
        raise ValueError("time step h must be positive")
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    M, d = batch.shape
    if d != model.dim:
        raise ValueError(f"batch has {d} coordinates, model {model.name} needs {model.dim}")

    hist_value = np.zeros(M)
    hist_grad = np.zeros((d, M))
    for j in range(order):
        past = history[j].jet(batch, order=1)
        hist_value += coeffs.alpha[j] * past.value
        hist_grad += coeffs.gamma[j] * past.grad
    A, b = model.coefficients(batch)
    drift = np.einsum("md,dm->m", b, hist_grad)

    f = candidate(lift_input(batch, order=1))
    fv = f.val
    grads = [f.partial(i) for i in range(d)]
    energy = 0.0
    for i in range(d):
        for j in range(d):
            if i == j:
                energy = energy + square(grads[i]) * A[:, i, i]
            elif i < j:
                energy = energy + grads[i] * grads[j] * (2.0 * A[:, i, j])
    vol = model.volume
    quad = reduce_sum(square(fv + hist_value)) * (vol / (2.0 * M))
    dirichlet = reduce_sum((energy + square(fv) * model.r) * 0.5 + fv * drift) * (vol / M)
    return quad + dirichlet * (coeffs.beta * h)


@dataclass(frozen=True)
class TDGFConfig:
    time_steps: int = 16
    stages: int = 200
    samples_per_dim: int = 200
    order: int = 1
    layers: int = 3
    nodes: int = 50
    seed: int = 0
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    output_bias: float = -4.0

    def samples(self, dim: int) -> int:
        return self.samples_per_dim * dim


def train_time_step(
    k: int,
    history: Sequence,
    warm_start,
    model: ModelSpec,
    config: TDGFConfig,
    rng: np.random.Generator,
    order: int | None = None,
) -> StepSolution:
    """Run ``config.stages`` sampling stages for step ``k`` starting from ``warm_start``.

    ``warm_start`` is any parametric function exposing ``theta``,
    ``with_theta``, ``bind`` and ``__call__(x, weights)`` (e.g. NetworkParams).
    """
    order = config.order if order is None else order
    h = model.T / config.time_steps
    params = warm_start
    adam = AdamState(params.theta.size, lr=config.lr, beta1=config.beta1, beta2=config.beta2)
    M = config.samples(model.dim)
    theta = params.theta.copy()
    for stage in range(config.stages):
        batch = sample_domain(model, M, rng)
        trace = GradientTrace()
        weights = params.bind(trace)
        loss = tdgf_loss(order, lambda x: params(x, weights), history, batch, h, model)
        lv = float(loss.value)
        if not np.isfinite(lv):
            raise TrainingError(f"TDGF step {k} stage {stage + 1}: non-finite loss {lv}")
        try:
            theta = adam.step(theta, parameter_gradient(trace, loss))
        except NonFiniteGradientError as exc:
            raise TrainingError(f"TDGF step {k} stage {stage + 1}: {exc}") from exc
        params = params.with_theta(theta)
    return StepSolution(k, k * h, params)


def solve(model: ModelSpec, config: TDGFConfig, callback=None) -> list[StepSolution]:
    """Train all ``config.time_steps`` steps; step 1 always uses the order-1 scheme."""
    if config.time_steps < 1:
        raise ValueError("need at least one time step")
    if config.order == 2 and config.time_steps < 2:
        raise ValueError("order 2 needs at least two time steps")
    init_seq, data_seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(data_seq)
    h = model.T / config.time_steps
    params = init_params(
        model.dim, config.nodes, config.layers, seed=int(init_seq.generate_state(1)[0]),
        K=model.K, r=model.r, anchor_time=h, output_bias=config.output_bias,
    )
    history: list = [PayoffSolution(model)]
    solutions: list[StepSolution] = []
    for k in range(1, config.time_steps + 1):
        warm = params.with_anchor_time(k * h)
        order = 1 if k == 1 else config.order
        sol = train_time_step(k, history[::-1], warm, model, config, rng, order=order)
        solutions.append(sol)
        history.append(sol)
        params = sol.params
        if callback is not None:
            callback(sol)
        log.debug("TDGF step %d/%d done", k, config.time_steps)
    return solutions


def nearest_step(solutions: Sequence[StepSolution], t: float) -> StepSolution:
    """Stored step whose time is closest to ``t`` (ties go to the earlier step)."""
    return min(solutions, key=lambda s: (abs(s.t - t), s.k))


def save_solution(solutions: Sequence[StepSolution], directory, model: ModelSpec,
                  config: TDGFConfig, extra: dict | None = None) -> Path:
    """Archive: ``step_XXXX.txt`` snapshots plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for sol in solutions:
        name = f"step_{sol.k:04d}.txt"
        save_params(sol.params, directory / name)
        files.append({"k": sol.k, "t": sol.t, "file": name})
    manifest = {
        "method": "tdgf",
        "K": len(solutions),
        "h": model.T / max(len(solutions), 1),
        "model": model.describe(),
        "config": asdict(config),
        "seed": config.seed,
        "steps": files,
    }
    if extra:
        manifest.update(extra)
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return directory


def load_solution(directory) -> tuple[list[StepSolution], dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    sols = [
        StepSolution(int(s["k"]), float(s["t"]), load_params(directory / s["file"]))
        for s in manifest["steps"]
    ]
    return sols, manifest
