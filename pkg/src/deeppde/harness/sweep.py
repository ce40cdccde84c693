"""Seeded one-parameter sweeps: train, time the training loop, evaluate."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace

from .. import dgm, tdgf
from ..evaluation import ErrorGrid, l2_error
from ..models import ModelSpec
from ..reference import reference_price
from .config import HarnessConfig

log = logging.getLogger(__name__)

METHODS = ("tdgf", "dgm")
MODELS = ("black_scholes", "heston")
# sweep parameter name -> solver config field
PARAMS = {
    "sampling_stages": "stages",
    "samples": "samples_per_dim",
    "layers": "layers",
    "nodes": "nodes",
    "time_steps": "time_steps",
}


@dataclass(frozen=True)
class SweepConfig:
    method: str
    model: str
    param: str
    values: tuple
    order: int = 1
    seeds: tuple = (0, 1, 2, 3, 4)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.param not in PARAMS:
            raise ValueError(f"unknown sweep parameter {self.param!r}; expected one of {sorted(PARAMS)}")
        if self.param == "time_steps" and self.method != "tdgf":
            raise ValueError("time_steps can only be swept for tdgf")
        values = tuple(int(v) for v in self.values)
        if not values or any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"sweep values must be nonempty and strictly increasing, got {values}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass(frozen=True)
class SweepRecord:
    method: str
    model: str
    param: str
    value: int
    order: int
    seed: int
    l2_error: float
    train_seconds: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def sort_key(self):
        return (self.method, self.model, self.param, self.order, self.value, self.seed)


def train(method: str, model: ModelSpec, solver_cfg):
    """Train one solver; returns ``(predictor at t = T, solution, seconds)``.

    The clock covers the training loop only.
    """
    start = time.perf_counter()
    if method == "tdgf":
        sols = tdgf.solve(model, solver_cfg)
        seconds = time.perf_counter() - start
        return sols[-1], sols, seconds
    sol = dgm.solve(model, solver_cfg)
    seconds = time.perf_counter() - start
    return sol, sol, seconds


def evaluate(predict, model: ModelSpec, harness: HarnessConfig) -> float:
    grid = ErrorGrid.for_model(model, harness.points)
    return l2_error(predict, lambda p: reference_price(model, grid.time, p, harness.cos), grid)


def run_one(cfg: SweepConfig, harness: HarnessConfig, value: int, seed: int) -> SweepRecord:
    model = harness.model_spec(cfg.model)
    solver_cfg = replace(harness.solver(cfg.method), **{PARAMS[cfg.param]: value, "seed": seed})
    order = cfg.order if cfg.method == "tdgf" else 0
    if cfg.method == "tdgf":
        solver_cfg = replace(solver_cfg, order=cfg.order)
    try:
        predict, _, seconds = train(cfg.method, model, solver_cfg)
        err = evaluate(predict, model, harness)
        status = "ok"
    except (tdgf.TrainingError, ValueError, FloatingPointError) as exc:
        log.warning("run %s=%d seed %d failed: %s", cfg.param, value, seed, exc)
        err, seconds, status = math.nan, math.nan, "failed"
    return SweepRecord(cfg.method, cfg.model, cfg.param, value, order, seed, err, seconds, status)


def run_sweep(cfg: SweepConfig, harness: HarnessConfig, progress=None) -> list[SweepRecord]:
    """One record per (value, seed); failed runs are kept and marked."""
    records = []
    for value in cfg.values:
        for seed in cfg.seeds:
            rec = run_one(cfg, harness, value, seed)
            records.append(rec)
            if progress is not None:
                progress(rec)
    return sorted(records, key=SweepRecord.sort_key)
