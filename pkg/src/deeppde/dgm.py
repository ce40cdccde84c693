"""Deep Galerkin method: one space-time network fitted to the PDE residual.

The network input is ``(x, t)`` with time to maturity ``t`` in the last
column.  The loss is

    T|Omega|/M1 sum [f_t - div(A grad f) + b . grad f + r f]^2
      + |Omega|/M2 sum [f(x, 0) - payoff(x)]^2

with ``div(A grad f) = sum_ij A_ij f_ij + sum_j (sum_i dA_ij/dx_i) f_j``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .autodiff import GradientTrace, Jet, lift_input, parameter_gradient, square
from .autodiff.tape import reduce_sum
from .models import ModelSpec, sample_domain
from .network import NetworkParams, init_params, load_params, save_params
from .optimizer import AdamState, NonFiniteGradientError
from .tdgf import TrainingError


def pde_residual(f: Jet, interior: np.ndarray, model: ModelSpec):
    """Pointwise residual ``f_t + A f + r f`` of a jet over ``(x, t)`` inputs."""
    d = model.dim
    x = interior[:, :d]
    A, b = model.coefficients(x)
    c = model.divergence_drift(x)
    res = f.partial(d) + f.val * model.r
    for i in range(d):
        res = res + f.partial(i) * (b[:, i] - c[:, i])
        res = res - f.partial2(i, i) * A[:, i, i]
        for j in range(i + 1, d):
            res = res - f.partial2(i, j) * (2.0 * A[:, i, j])
    return res


def dgm_loss(candidate: Callable[[Jet], Jet], interior, initial, model: ModelSpec):
    """Interior residual plus initial-condition mismatch.

    ``interior`` has shape ``(M1, d + 1)`` (time last) and ``initial`` shape
    ``(M2, d)``; ``candidate`` maps a lifted ``(M, d + 1)`` jet to the output.
    """
    d = model.dim
    interior = np.atleast_2d(np.asarray(interior, dtype=float))
    initial = np.atleast_2d(np.asarray(initial, dtype=float))
    if interior.shape[1] != d + 1 or initial.shape[1] != d:
        raise ValueError(
            f"expected interior points with {d + 1} columns and initial points with {d}, "
            f"got {interior.shape[1]} and {initial.shape[1]}"
        )
    f = candidate(lift_input(interior, order=2, hess_coords=range(d)))
    res = pde_residual(f, interior, model)
    vol = model.volume
    interior_term = reduce_sum(square(res)) * (model.T * vol / len(interior))

    at_zero = np.hstack([initial, np.zeros((len(initial), 1))])
    f0 = candidate(lift_input(at_zero, order=0)).val
    initial_term = reduce_sum(square(f0 - model.payoff(initial))) * (vol / len(initial))
    return interior_term + initial_term


@dataclass(frozen=True)
class DGMConfig:
    stages: int = 20_000
    samples_per_dim: int = 200
    layers: int = 3
    nodes: int = 50
    seed: int = 0
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    output_bias: float = -4.0
    anchor: bool = True

    def interior_samples(self, dim: int) -> int:
        return self.samples_per_dim * (dim + 1)

    def initial_samples(self, dim: int) -> int:
        return self.samples_per_dim * dim


@dataclass(frozen=True)
class DGMSolution:
    """Trained space-time network; evaluates prices at any ``t`` in ``[0, T]``."""

    params: NetworkParams
    T: float

    def at(self, t: float) -> Callable[[np.ndarray], np.ndarray]:
        if not 0.0 <= t <= self.T:
            raise ValueError(f"t={t} outside [0, {self.T}]")

        def price(points):
            points = np.atleast_2d(np.asarray(points, dtype=float))
            tx = np.hstack([points, np.full((len(points), 1), t)])
            return self.params(lift_input(tx, order=0)).value

        return price

    def __call__(self, points) -> np.ndarray:
        return self.at(self.T)(points)


def solve(model: ModelSpec, config: DGMConfig, start: NetworkParams | None = None,
          callback=None) -> DGMSolution:
    """Run ``config.stages`` sampling stages with fresh batches each stage.

    ``callback(stage, params)`` is called after every update when given.
    """
    init_seq, data_seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(data_seq)
    d = model.dim
    params = start or init_params(
        d + 1, config.nodes, config.layers, seed=int(init_seq.generate_state(1)[0]),
        K=model.K, r=model.r, anchor_time=None, anchor=config.anchor,
        output_bias=config.output_bias,
    )
    adam = AdamState(params.size, lr=config.lr, beta1=config.beta1, beta2=config.beta2)
    M1, M2 = config.interior_samples(d), config.initial_samples(d)
    theta = params.theta.copy()
    for stage in range(config.stages):
        interior = sample_domain(model, M1, rng, include_time=True)
        initial = sample_domain(model, M2, rng)
        trace = GradientTrace()
        weights = params.bind(trace)
        loss = dgm_loss(lambda x: params(x, weights), interior, initial, model)
        lv = float(loss.value)
        if not np.isfinite(lv):
            raise TrainingError(f"DGM stage {stage + 1}: non-finite loss {lv}")
        try:
            theta = adam.step(theta, parameter_gradient(trace, loss))
        except NonFiniteGradientError as exc:
            raise TrainingError(f"DGM stage {stage + 1}: {exc}") from exc
        params = params.with_theta(theta)
        if callback is not None:
            callback(stage + 1, params)
    return DGMSolution(params, model.T)


def save_solution(solution: DGMSolution, directory, model: ModelSpec, config: DGMConfig,
                  extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_params(solution.params, directory / "network.txt")
    manifest = {
        "method": "dgm",
        "model": model.describe(),
        "config": asdict(config),
        "seed": config.seed,
        "file": "network.txt",
    }
    if extra:
        manifest.update(extra)
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return directory


def load_solution(directory) -> tuple[DGMSolution, dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    params = load_params(directory / manifest["file"])
    return DGMSolution(params, float(manifest["model"]["T"])), manifest
