from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deeppde.autodiff import (
    DomainError,
    GradientTrace,
    Jet,
    TraceError,
    available_backends,
    finite_difference_check,
    lift_input,
    parameter_gradient,
    reduce_sum,
    square,
    use_backend,
)
from deeppde.autodiff import _fallback, kernels
from deeppde.autodiff.tape import linear


def test_lift_order1():
    x = lift_input(np.array([0.5]), order=1)
    assert x.value[0] == 0.5
    assert x.grad[0, 0] == 1.0


def test_lift_order2_seeds_linear_coordinates():
    x = lift_input(np.array([1.0, 0.04]), order=2)
    assert np.array_equal(x.grad[:, 1], [0.0, 1.0])
    assert np.all(x.hess == 0.0)


def test_lift_order0_has_no_gradient():
    x = lift_input(np.array([0.3, 0.2]), order=0)
    assert np.all(x.grad == 0.0)
    with pytest.raises(ValueError):
        x.partial(0)


def test_tanh_at_zero():
    y = lift_input(np.array([0.0]), order=2)[..., 0].tanh()
    assert y.value == 0.0
    assert y.grad[0] == 1.0
    assert y.hess[0, 0] == 0.0


def test_softplus_at_zero():
    y = lift_input(np.array([0.0]), order=1)[..., 0].softplus()
    assert y.value == pytest.approx(np.log(2.0), abs=1e-12)
    assert y.grad[0] == pytest.approx(0.5, abs=1e-15)


def test_softplus_overflow_safe():
    y = lift_input(np.array([800.0, -800.0]), order=2)[None, :].softplus()
    assert np.all(np.isfinite(y.value)) and np.all(np.isfinite(y.hess))
    assert y.value[0, 0] == pytest.approx(800.0)


def test_square_product():
    x = lift_input(np.array([3.0]), order=2)[..., 0]
    y = x * x
    assert (y.value, y.grad[0], y.hess[0, 0]) == (9.0, 6.0, 2.0)


def test_quadratic_parameter_gradient():
    tr = GradientTrace()
    theta = tr.param(np.array([2.0]))
    assert parameter_gradient(tr, reduce_sum(square(theta))).tolist() == [4.0]


def test_gradient_of_spatial_derivative():
    # f = theta * x, loss = (df/dx)^2 = theta^2, d loss / d theta = 2 theta
    tr = GradientTrace()
    theta = tr.param(np.array([[1.7]]))
    f = Jet(linear(lift_input(np.array([3.0]), order=1).data, theta), 1, 1)
    loss = reduce_sum(square(f.partial(0)))
    assert parameter_gradient(tr, loss)[0] == pytest.approx(3.4, abs=1e-14)


def test_mixed_trace_is_an_error():
    a, b = GradientTrace(), GradientTrace()
    with pytest.raises(TraceError):
        a.param(np.ones(2)) + b.param(np.ones(2))


def test_foreign_loss_rejected():
    a, b = GradientTrace(), GradientTrace()
    with pytest.raises(TraceError):
        a.gradient(reduce_sum(b.param(np.ones(2))))


def test_reset_starts_from_zero():
    tr = GradientTrace()
    p = tr.param(np.array([1.0, 2.0]))
    first = parameter_gradient(tr, reduce_sum(square(p)))
    second = parameter_gradient(tr, reduce_sum(square(p)))
    assert np.array_equal(first, second)


def test_untouched_parameter_has_zero_gradient():
    tr = GradientTrace()
    p = tr.param(np.array([1.0]))
    tr.param(np.array([5.0, 6.0]))
    assert parameter_gradient(tr, reduce_sum(p * 3.0)).tolist() == [3.0, 0.0, 0.0]


def test_domain_errors():
    x = lift_input(np.array([0.0]), order=1)
    with pytest.raises(DomainError):
        x.log()
    with pytest.raises(DomainError):
        x.reciprocal()


def test_positive_part_kink_derivative_is_zero():
    y = lift_input(np.array([1.0]), order=2)[..., 0] - 1.0
    z = y.positive_part()
    assert z.value == 0.0 and z.grad[0] == 0.0


def test_fd_linear_is_exact():
    w = np.array([1.5, -2.0, 0.25])
    assert finite_difference_check(lambda th: reduce_sum(th * w), np.array([0.1, 0.2, 0.3])) < 1e-9


def test_fd_softplus():
    def f(th):
        x = Jet(th[None, :] if not isinstance(th, np.ndarray) else th[None, :], 1, 0)
        return reduce_sum(x.softplus().data)

    assert finite_difference_check(f, np.array([1.0])) < 1e-8


def test_hessian_is_exactly_symmetric():
    rng = np.random.default_rng(3)
    x = lift_input(rng.normal(size=(5, 3)), order=2)
    W = rng.normal(size=(4, 3))
    y = (Jet(linear(x.data, W), 3, 2, x.pairs).tanh() * 1.3).softplus()
    H = y.hess
    assert np.array_equal(H, np.swapaxes(H, 0, 1))


# -- chain rule against closed-form derivatives ------------------------------------

UNARY = {
    "tanh": (np.tanh, lambda u: 1 - np.tanh(u) ** 2, lambda u: -2 * np.tanh(u) * (1 - np.tanh(u) ** 2)),
    "softplus": (lambda u: np.logaddexp(0, u), lambda u: 1 / (1 + np.exp(-u)),
                 lambda u: np.exp(-u) / (1 + np.exp(-u)) ** 2),
    "exp": (np.exp, np.exp, np.exp),
    "log": (np.log, lambda u: 1 / u, lambda u: -1 / u**2),
    "reciprocal": (lambda u: 1 / u, lambda u: -1 / u**2, lambda u: 2 / u**3),
}


@settings(max_examples=40, deadline=None)
@given(
    name=st.sampled_from(sorted(UNARY)),
    x=st.lists(st.floats(0.2, 2.0), min_size=2, max_size=2),
    w=st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=2),
)
def test_unary_chain_rule(name, x, w):
    # g(x) = phi(w . x + w0 x0 x1) so the inner function has a nonzero Hessian
    x = np.array(x)
    w = np.array(w)
    jx = lift_input(x, order=2)
    inner = jx[0] * w[0] + jx[1] * w[1] + jx[0] * jx[1] * 0.5
    if name in ("log", "reciprocal"):
        inner = inner * inner + 0.1
    out = getattr(inner, name)()
    phi, d1, d2 = UNARY[name]
    u, gu, Hu = inner.value, inner.grad, inner.hess
    assert out.value == pytest.approx(phi(u), rel=1e-12)
    np.testing.assert_allclose(out.grad, d1(u) * gu, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(out.hess, d2(u) * np.outer(gu, gu) + d1(u) * Hu, rtol=1e-10, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(0.5, 3.0))
def test_division_matches_quotient_rule(x, c):
    x = np.array(x)
    jx = lift_input(x, order=2)
    num = jx[0] * jx[1] + jx[2]
    den = jx[2] * jx[2] + c
    q = num / den
    n, dn, Hn = num.value, num.grad, num.hess
    v, dv, Hv = den.value, den.grad, den.hess
    assert q.value == pytest.approx(n / v, rel=1e-12)
    np.testing.assert_allclose(q.grad, dn / v - n * dv / v**2, rtol=1e-10, atol=1e-13)
    Hq = Hn / v - (np.outer(dn, dv) + np.outer(dv, dn)) / v**2 + n * (2 * np.outer(dv, dv) / v**3 - Hv / v**2)
    np.testing.assert_allclose(q.hess, Hq, rtol=1e-9, atol=1e-12)


# -- backends ----------------------------------------------------------------------


def _kernel_inputs(seed, C=6, N=37):
    rng = np.random.default_rng(seed)
    pi = np.array([0, 0, 1], dtype=np.intp)
    pj = np.array([0, 1, 1], dtype=np.intp)
    u = np.ascontiguousarray(rng.normal(size=(C, N)))
    return rng, u, pi, pj


@pytest.mark.skipif("compiled" not in available_backends(), reason="extension not built")
def test_compiled_kernels_match_fallback():
    from deeppde.autodiff import _jetkernels as ext

    rng, u, pi, pj = _kernel_inputs(0)
    f = [np.ascontiguousarray(rng.normal(size=u.shape[1])) for _ in range(4)]
    adj = np.ascontiguousarray(rng.normal(size=u.shape))
    v = np.ascontiguousarray(rng.normal(size=u.shape))
    np.testing.assert_allclose(ext.unary_forward(u, *f[:3], 2, pi, pj),
                               _fallback.unary_forward(u, *f[:3], 2, pi, pj), rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(ext.unary_backward(u, *f[1:], adj, 2, pi, pj),
                               _fallback.unary_backward(u, *f[1:], adj, 2, pi, pj), rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(ext.mul_forward(u, v, 2, pi, pj),
                               _fallback.mul_forward(u, v, 2, pi, pj), rtol=1e-13, atol=1e-13)
    for a, b in zip(ext.mul_backward(u, v, adj, 2, pi, pj), _fallback.mul_backward(u, v, adj, 2, pi, pj)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


@pytest.mark.skipif("compiled" not in available_backends(), reason="extension not built")
def test_backends_agree_on_network_gradient():
    from deeppde.models import black_scholes
    from deeppde.network import init_params
    from deeppde.dgm import dgm_loss

    m = black_scholes()
    p = init_params(2, 6, 2, seed=4, anchor_time=None, output_bias=-1.0)
    rng = np.random.default_rng(0)
    interior = np.column_stack([rng.uniform(0.01, 3, 20), rng.uniform(0, 1, 20)])
    initial = rng.uniform(0.01, 3, (10, 1))
    grads = {}
    before = kernels.BACKEND
    try:
        for name in ("compiled", "python"):
            use_backend(name)
            tr = GradientTrace()
            w = p.bind(tr)
            grads[name] = parameter_gradient(tr, dgm_loss(lambda x: p(x, w), interior, initial, m))
    finally:
        use_backend(before)
    np.testing.assert_allclose(grads["compiled"], grads["python"], rtol=1e-11, atol=1e-14)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        use_backend("gpu")


def test_replay_is_bit_identical():
    from deeppde.models import black_scholes
    from deeppde.network import init_params
    from deeppde.tdgf import PayoffSolution, tdgf_loss

    m = black_scholes()
    p = init_params(1, 5, 2, seed=1, anchor_time=0.1)
    batch = np.linspace(0.05, 2.9, 30)[:, None]
    out = []
    for _ in range(2):
        tr = GradientTrace()
        w = p.bind(tr)
        out.append(parameter_gradient(tr, tdgf_loss(1, lambda x: p(x, w), [PayoffSolution(m)], batch, 0.1, m)))
    assert np.array_equal(out[0], out[1])
