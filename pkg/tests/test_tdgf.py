from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from conftest import FlatModel, ad_vs_fd, relative_error
from deeppde.autodiff import GradientTrace, constant_jet, parameter_gradient
from deeppde.models import black_scholes, heston, sample_domain
from deeppde.network import init_params
from deeppde.tdgf import (
    PayoffSolution,
    StepSolution,
    TDGFConfig,
    load_solution,
    nearest_step,
    save_solution,
    scheme_coefficients,
    solve,
    tdgf_loss,
    train_time_step,
)


class ConstantNet:
    """One-parameter network whose output is the parameter itself."""

    def __init__(self, c):
        self.theta = np.array([float(c)])

    @property
    def size(self):
        return 1

    def with_theta(self, theta):
        return ConstantNet(theta[0])

    def bind(self, trace):
        return trace.param(self.theta.copy())

    def __call__(self, x, weights=None):
        c = self.theta if weights is None else weights
        return constant_jet(c * np.ones(x.shape[:-1]), x.dim, x.order, x.pairs)


class ConstantHistory:
    def __init__(self, c):
        self.c = c

    def jet(self, points, order=1):
        points = np.atleast_2d(points)
        return constant_jet(np.full(len(points), self.c), points.shape[1], order)


def test_scheme_coefficients():
    s1, s2 = scheme_coefficients(1), scheme_coefficients(2)
    assert (s1.alpha, s1.beta, s1.gamma) == ((-1.0,), 1.0, (1.0,))
    assert s2.alpha == pytest.approx((-4 / 3, 1 / 3)) and s2.beta == pytest.approx(2 / 3)
    assert s2.gamma == (2.0, -1.0)
    assert sum(s2.alpha) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(ValueError):
        scheme_coefficients(3)


def test_pure_projection_loss():
    m = FlatModel(r=0.0)
    batch = np.linspace(0.5, 1.5, 9)[:, None]
    hist = [ConstantHistory(0.3)]
    assert tdgf_loss(1, ConstantNet(0.3), hist, batch, 0.1, m) == pytest.approx(0.0, abs=1e-15)
    assert tdgf_loss(1, ConstantNet(0.5), hist, batch, 0.1, m) == pytest.approx(0.5 * 0.04, rel=1e-12)


def test_constant_candidate_closed_form():
    m = FlatModel(r=0.05)
    batch = np.linspace(0.5, 1.5, 7)[:, None]
    c, c0, h = 0.8, 1.1, 0.02
    got = tdgf_loss(1, ConstantNet(c), [ConstantHistory(c0)], batch, h, m)
    assert got == pytest.approx(0.5 * (c - c0) ** 2 + h * 0.05 * c * c / 2, rel=1e-12)


def test_order2_history_cancels():
    m = black_scholes().with_(sigma=0.0, r=0.0)
    flat = FlatModel(r=0.0)
    pay = PayoffSolution(m)
    batch = sample_domain(m, 50, 0)
    loss = tdgf_loss(2, lambda x: pay.jet(x.value, 1), [pay, pay], batch, 0.1, flat)
    assert loss == pytest.approx(0.0, abs=1e-15)


def test_orders_agree_as_h_vanishes():
    m = black_scholes()
    p = init_params(1, 6, 1, seed=2, anchor_time=0.1, output_bias=-2.0)
    prev = StepSolution(1, 0.1, init_params(1, 6, 1, seed=3, anchor_time=0.1))
    batch = sample_domain(m, 40, 1)
    a = tdgf_loss(1, p, [prev], batch, 1e-8, m)
    b = tdgf_loss(2, p, [prev, prev], batch, 1e-8, m)
    assert abs(a - b) < 1e-6


def test_loss_validates_inputs():
    m = black_scholes()
    p = init_params(1, 3, 1, seed=0)
    batch = sample_domain(m, 5, 0)
    with pytest.raises(ValueError):
        tdgf_loss(2, p, [PayoffSolution(m)], batch, 0.1, m)
    with pytest.raises(ValueError):
        tdgf_loss(1, p, [PayoffSolution(m)], np.ones((5, 2)), 0.1, m)


@pytest.mark.parametrize("order,model", [(1, black_scholes()), (2, heston())])
def test_loss_gradient_matches_finite_differences(order, model):
    d = model.dim
    p = init_params(d, 4, 2, seed=order, anchor_time=0.2, output_bias=-1.0)
    hist = [StepSolution(1, 0.1, init_params(d, 4, 2, seed=9, anchor_time=0.1)), PayoffSolution(model)]
    batch = sample_domain(model, 30, 4)
    ad, fd = ad_vs_fd(p, lambda q, w: tdgf_loss(order, lambda x: q(x, w), hist[:order], batch, 0.05, model))
    assert relative_error(ad, fd) < 1e-6


def test_history_is_frozen():
    m = black_scholes()
    p = init_params(1, 4, 1, seed=0, anchor_time=0.2)
    prev = init_params(1, 4, 1, seed=1, anchor_time=0.1)
    batch = sample_domain(m, 20, 0)

    def grad(mutate):
        hist = StepSolution(1, 0.1, prev.with_theta(prev.theta.copy()))
        tr = GradientTrace()
        w = p.bind(tr)
        loss = tdgf_loss(1, lambda x: p(x, w), [hist], batch, 0.1, m)
        if mutate:
            hist.params.theta[:] += 1.0
        assert len(tr.gradient(loss)) == len(w["layers"]) * 6 + 4
        return parameter_gradient(tr, loss)

    assert np.array_equal(grad(False), grad(True))


def test_zero_stages_returns_warm_start():
    m = black_scholes()
    p = init_params(1, 4, 1, seed=0, anchor_time=0.1)
    sol = train_time_step(1, [PayoffSolution(m)], p, m, TDGFConfig(stages=0), np.random.default_rng(0))
    assert np.array_equal(sol.params.theta, p.theta)


def test_r_only_step_reaches_implicit_fixed_point():
    m = FlatModel(r=0.05)
    cfg = TDGFConfig(time_steps=100, stages=2000, samples_per_dim=16)
    sol = train_time_step(1, [ConstantHistory(1.0)], ConstantNet(1.0), m, cfg, np.random.default_rng(0))
    assert sol.params.theta[0] == pytest.approx(1 / 1.0005, abs=1e-4)


def test_solve_is_deterministic_and_bounded(tmp_path):
    m = black_scholes()
    cfg = TDGFConfig(time_steps=3, stages=4, samples_per_dim=20, nodes=5, layers=1, order=2)
    a, b = solve(m, cfg), solve(m, cfg)
    assert [s.t for s in a] == pytest.approx([1 / 3, 2 / 3, 1.0])
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.params.theta, sb.params.theta)
    S = np.linspace(0.01, 3, 50)[:, None]
    for s in a:
        assert np.all(s(S) > np.maximum(S[:, 0] - np.exp(-0.05 * s.t), 0))
    save_solution(a, tmp_path, m, cfg)
    back, manifest = load_solution(tmp_path)
    assert manifest["K"] == 3 and manifest["h"] == pytest.approx(1 / 3)
    assert np.array_equal(back[-1](S), a[-1](S))


def test_single_step_and_validation():
    m = black_scholes()
    assert len(solve(m, TDGFConfig(time_steps=1, stages=1, samples_per_dim=5, nodes=3, layers=1))) == 1
    with pytest.raises(ValueError):
        solve(m, TDGFConfig(time_steps=1, order=2))


def test_nearest_step():
    sols = [StepSolution(k, k * 0.25, None) for k in range(1, 5)]
    assert nearest_step(sols, 0.6).k == 2
    assert nearest_step(sols, 0.0).k == 1
    assert nearest_step(sols, 0.625).k == 2


@pytest.mark.slow
def test_heston_desk_accuracy():
    from deeppde.evaluation import ErrorGrid, l2_error
    from deeppde.reference import reference_price

    m = heston()
    sols = solve(m, TDGFConfig())
    err = l2_error(sols[-1], lambda p: reference_price(m, m.T, p), ErrorGrid.for_model(m))
    print(f"heston desk l2 error {err:.4g}")
    assert err < 5e-2
