"""Second-order Taylor jets in the input coordinates.

A :class:`Jet` carries, for every element of an array, the value together with
its first derivatives and a chosen set of second derivatives with respect to
the lifted input coordinates.  The jet data is a single array (or trace
:class:`~deeppde.autodiff.tape.Node`) of shape ``(C, *shape)`` so that
parameter gradients flow through value and derivative components alike:
a loss that reads ``partial2`` of a network output gets exact parameter
gradients of those second derivatives.

Component layout: ``[value, d/dx_0 .. d/dx_{d-1}, d2/dx_i dx_j for (i, j) in pairs]``
where ``pairs`` lists upper-triangle index pairs.  Only one triangle is stored
so the Hessian assembled by :attr:`Jet.hess` is exactly symmetric.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import kernels
from .tape import DomainError, Node, add, linear, neg, sub, trace_of, unbroadcast, value_of


def _all_pairs(coords: Sequence[int]) -> tuple[tuple[int, int], ...]:
    coords = sorted(coords)
    return tuple((i, j) for a, i in enumerate(coords) for j in coords[a:])


class Jet:
    """Value plus spatial derivatives (order 0, 1 or 2) of an array."""

    __slots__ = ("data", "dim", "order", "pairs", "_pi", "_pj")
    __array_priority__ = 1000.0

    def __init__(self, data, dim: int, order: int, pairs=()):
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
        self.data = data
        self.dim = dim
        self.order = order
        self.pairs = tuple(pairs) if order == 2 else ()
        self._pi = np.array([p[0] for p in self.pairs], dtype=np.intp)
        self._pj = np.array([p[1] for p in self.pairs], dtype=np.intp)
        expected = self.ncomp
        if value_of(data).shape[0] != expected:
            raise ValueError(f"jet data has {value_of(data).shape[0]} components, expected {expected}")

    # -- structure -----------------------------------------------------------------
    @property
    def ng(self) -> int:
        return self.dim if self.order >= 1 else 0

    @property
    def ncomp(self) -> int:
        return 1 + self.ng + len(self.pairs)

    @property
    def shape(self) -> tuple:
        return value_of(self.data).shape[1:]

    @property
    def trace(self):
        return self.data.trace if isinstance(self.data, Node) else None

    def _like(self, data) -> "Jet":
        return Jet(data, self.dim, self.order, self.pairs)

    def _check_compatible(self, other: "Jet") -> None:
        if (self.dim, self.order, self.pairs) != (other.dim, other.order, other.pairs):
            raise ValueError(
                f"incompatible jets: (dim={self.dim}, order={self.order}, pairs={self.pairs}) "
                f"vs (dim={other.dim}, order={other.order}, pairs={other.pairs})"
            )

    def detach(self) -> "Jet":
        return self._like(np.array(value_of(self.data)))

    def __repr__(self):
        return f"Jet(shape={self.shape}, dim={self.dim}, order={self.order}, traced={self.trace is not None})"

    # -- read-out ------------------------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return value_of(self.data)[0]

    @property
    def grad(self) -> np.ndarray:
        """First derivatives, shape ``(dim, *shape)``; zeros in order-0 mode."""
        raw = value_of(self.data)
        if self.order == 0:
            return np.zeros((self.dim,) + self.shape)
        return raw[1 : 1 + self.dim]

    @property
    def hess(self) -> np.ndarray:
        """Symmetric second derivatives, shape ``(dim, dim, *shape)``; untracked pairs are zero."""
        raw = value_of(self.data)
        out = np.zeros((self.dim, self.dim) + self.shape)
        base = 1 + self.ng
        for p, (i, j) in enumerate(self.pairs):
            out[i, j] = raw[base + p]
            out[j, i] = raw[base + p]
        return out

    @property
    def val(self):
        """Value component, recorded on the trace when the jet is."""
        return self.data[0]

    def partial(self, i: int):
        if self.order < 1:
            raise ValueError("first derivatives are not tracked in order-0 mode")
        if not 0 <= i < self.dim:
            raise IndexError(f"coordinate {i} out of range for dim {self.dim}")
        return self.data[1 + i]

    def partial2(self, i: int, j: int):
        key = (min(i, j), max(i, j))
        if key not in self.pairs:
            raise ValueError(f"second derivative {key} is not tracked (pairs={self.pairs})")
        return self.data[1 + self.ng + self.pairs.index(key)]

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return self._like(self.data[(slice(None),) + idx])

    # -- arithmetic ----------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return self._like(add(self.data, other.data))
        return self._like(_add_value(self.data, other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return self._like(sub(self.data, other.data))
        return self._like(_add_value(self.data, -other if not isinstance(other, Node) else neg(other)))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self._like(neg(self.data))

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return _mul(self, other)
        return self._like(_scale(self.data, other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        ov = value_of(other)
        if np.any(ov == 0.0):
            raise DomainError("division by zero")
        if isinstance(other, Node):
            return self._like(_scale(self.data, 1.0 / other))
        return self._like(_scale(self.data, 1.0 / ov))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    # -- elementary functions --------------------------------------------------------
    def tanh(self) -> "Jet":
        return _unary(self, _tanh_derivs)

    def softplus(self) -> "Jet":
        return _unary(self, _softplus_derivs)

    def exp(self) -> "Jet":
        return _unary(self, _exp_derivs)

    def log(self) -> "Jet":
        if np.any(self.value <= 0.0):
            raise DomainError("log of non-positive value")
        return _unary(self, _log_derivs)

    def reciprocal(self) -> "Jet":
        if np.any(self.value == 0.0):
            raise DomainError("division by zero")
        return _unary(self, _recip_derivs)

    def positive_part(self) -> "Jet":
        """``max(x, 0)``; the derivative at the kink is taken as 0."""
        return _unary(self, _relu_derivs)

    def maximum(self, c) -> "Jet":
        """``max(x, c)`` for a constant ``c``."""
        return (self - c).positive_part() + c

    def sum(self, axis=-1) -> "Jet":
        from .tape import reduce_sum

        ax = axis if axis < 0 else axis + 1
        return self._like(reduce_sum(self.data, ax))


def tanh(x: Jet) -> Jet:
    return x.tanh()


def softplus(x: Jet) -> Jet:
    return x.softplus()


def exp(x: Jet) -> Jet:
    return x.exp()


def log(x: Jet) -> Jet:
    return x.log()


def maximum(x: Jet, c) -> Jet:
    return x.maximum(c)


# -- derivative tables: (f, f', f'', f''') evaluated at the value component -----------

def _tanh_derivs(u):
    t = np.tanh(u)
    f1 = 1.0 - t * t
    f2 = -2.0 * t * f1
    f3 = f1 * (6.0 * t * t - 2.0)
    return t, f1, f2, f3


def _softplus_derivs(u):
    f0 = np.logaddexp(0.0, u)
    s = 0.5 * (1.0 + np.tanh(0.5 * u))
    f2 = s * (1.0 - s)
    return f0, s, f2, f2 * (1.0 - 2.0 * s)


def _exp_derivs(u):
    e = np.exp(u)
    return e, e, e, e


def _log_derivs(u):
    inv = 1.0 / u
    return np.log(u), inv, -inv * inv, 2.0 * inv * inv * inv


def _recip_derivs(u):
    inv = 1.0 / u
    inv2 = inv * inv
    return inv, -inv2, 2.0 * inv2 * inv, -6.0 * inv2 * inv2


def _relu_derivs(u):
    f1 = (u > 0.0).astype(float)
    zero = np.zeros_like(u)
    return u * f1, f1, zero, zero


# -- recorded jet operations ----------------------------------------------------------

def _flat(a: np.ndarray, ncomp: int) -> np.ndarray:
    return np.ascontiguousarray(a.reshape(ncomp, -1), dtype=float)


def _unary(x: Jet, derivs) -> Jet:
    u = value_of(x.data)
    C = x.ncomp
    u2 = _flat(u, C)
    f0, f1, f2, f3 = (np.ascontiguousarray(f) for f in derivs(u2[0]))
    kern = kernels.active()
    out = kern.unary_forward(u2, f0, f1, f2, x.ng, x._pi, x._pj).reshape(u.shape)
    if not isinstance(x.data, Node):
        return x._like(out)

    def backward(g):
        gin = kern.unary_backward(u2, f1, f2, f3, _flat(g, C), x.ng, x._pi, x._pj)
        return (gin.reshape(u.shape),)

    return x._like(x.data.trace.record(out, (x.data,), backward))


def _mul(a: Jet, b: Jet) -> Jet:
    av, bv = value_of(a.data), value_of(b.data)
    C = a.ncomp
    shape = np.broadcast_shapes(av.shape, bv.shape)
    a2 = _flat(np.broadcast_to(av, shape), C)
    b2 = _flat(np.broadcast_to(bv, shape), C)
    kern = kernels.active()
    out = kern.mul_forward(a2, b2, a.ng, a._pi, a._pj).reshape(shape)
    trace = trace_of(a.data, b.data)
    if trace is None:
        return a._like(out)

    def backward(g):
        ga, gb = kern.mul_backward(a2, b2, _flat(g, C), a.ng, a._pi, a._pj)
        return (
            unbroadcast(ga.reshape(shape), av.shape) if isinstance(a.data, Node) else None,
            unbroadcast(gb.reshape(shape), bv.shape) if isinstance(b.data, Node) else None,
        )

    return a._like(trace.record(out, (a.data, b.data), backward))


def _add_value(data, c):
    """Add a derivative-free quantity to the value component."""
    dv, cv = value_of(data), value_of(c)
    out = dv.copy()
    out[0] = out[0] + cv
    trace = trace_of(data, c)
    if trace is None:
        return out
    return trace.record(out, (data, c), lambda g: (g, unbroadcast(g[0], cv.shape)))


def _scale(data, s):
    """Multiply every component by a derivative-free factor."""
    dv, sv = value_of(data), value_of(s)
    out = dv * sv
    trace = trace_of(data, s)
    if trace is None:
        return out
    return trace.record(
        out,
        (data, s),
        lambda g: (
            unbroadcast(g * sv, dv.shape) if isinstance(data, Node) else None,
            unbroadcast(g * dv, sv.shape) if isinstance(s, Node) else None,
        ),
    )


def jet_linear(x: Jet, weight, bias=None) -> Jet:
    """Affine map over the last axis of a jet: ``W x + b`` (bias on values only)."""
    return x._like(linear(x.data, weight, bias, bias_rows=0))


def constant_jet(value, dim: int, order: int, pairs=()) -> Jet:
    """Embed a derivative-free quantity (array or Node) as a jet with zero derivatives."""
    pairs = tuple(pairs) if order == 2 else ()
    C = 1 + (dim if order >= 1 else 0) + len(pairs)
    vv = value_of(value)
    out = np.zeros((C,) + vv.shape)
    out[0] = vv
    if isinstance(value, Node):
        out = value.trace.record(out, (value,), lambda g: (g[0],))
    return Jet(out, dim, order, pairs)


def lift_input(x, order: int = 1, hess_coords: Sequence[int] | None = None) -> Jet:
    """Seed the input coordinates as a jet.

    ``x`` has shape ``(..., d)``; coordinate ``i`` gets gradient ``e_i`` and a
    zero Hessian.  ``hess_coords`` selects which coordinates take part in the
    tracked second derivatives (all by default).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    d = x.shape[-1]
    if d < 1:
        raise ValueError("need at least one input coordinate")
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    pairs = _all_pairs(range(d) if hess_coords is None else hess_coords) if order == 2 else ()
    ng = d if order >= 1 else 0
    data = np.zeros((1 + ng + len(pairs),) + x.shape)
    data[0] = x
    for i in range(ng):
        data[1 + i, ..., i] = 1.0
    return Jet(data, d, order, pairs)
