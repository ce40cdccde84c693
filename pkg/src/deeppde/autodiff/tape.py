"""Reverse-mode gradient trace over numpy arrays.

A :class:`GradientTrace` records every operation whose inputs include a
:class:`Node`.  Plain ndarrays are treated as constants and never recorded,
which is how frozen networks (history steps, reference wrappers) are
evaluated without paying for a backward pass.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

_trace_ids = itertools.count()


class TraceError(ValueError):
    """Misuse of a gradient trace (mixing traces, foreign loss, ...)."""


class DomainError(ValueError):
    """Elementary function evaluated outside its domain."""


Backward = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Node:
    """An array value recorded on a :class:`GradientTrace`."""

    __slots__ = ("value", "trace", "index", "parents", "backward")
    __array_priority__ = 1000.0

    def __init__(self, value, trace, index, parents=(), backward=None):
        self.value = value
        self.trace = trace
        self.index = index
        self.parents = parents
        self.backward = backward

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Node(shape={self.value.shape}, trace={self.trace.id}, index={self.index})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None):
        return reduce_sum(self, axis)


class GradientTrace:
    """Records operations and replays them backwards for parameter adjoints.

    Parameters are registered with :meth:`param`; :meth:`gradient` returns one
    adjoint array per registered parameter, in registration order.
    """

    def __init__(self):
        self.id = next(_trace_ids)
        self._nodes: list[Node] = []
        self._params: list[Node] = []

    def __len__(self):
        return len(self._nodes)

    @property
    def params(self) -> list[Node]:
        return list(self._params)

    @property
    def num_params(self) -> int:
        return int(sum(p.value.size for p in self._params))

    def param(self, value) -> Node:
        node = Node(np.asarray(value, dtype=float), self, len(self._nodes))
        self._nodes.append(node)
        self._params.append(node)
        return node

    def record(self, value, parents, backward) -> Node:
        node = Node(value, self, len(self._nodes), tuple(parents), backward)
        self._nodes.append(node)
        return node

    def reset(self) -> None:
        """Drop all recorded operations and parameters."""
        self._nodes.clear()
        self._params.clear()

    def gradient(self, loss: Node) -> list[np.ndarray]:
        if not isinstance(loss, Node) or loss.trace is not self:
            raise TraceError("loss was not recorded on this trace")
        if loss.value.size != 1:
            raise TraceError(f"loss must be a scalar, got shape {loss.value.shape}")
        adjoints: list[np.ndarray | None] = [None] * (loss.index + 1)
        adjoints[loss.index] = np.ones_like(loss.value)
        for node in reversed(self._nodes[: loss.index + 1]):
            adj = adjoints[node.index]
            if adj is None or node.backward is None:
                continue
            for parent, contrib in zip(node.parents, node.backward(adj)):
                if contrib is None or not isinstance(parent, Node):
                    continue
                prev = adjoints[parent.index]
                adjoints[parent.index] = contrib if prev is None else prev + contrib
        out = []
        for p in self._params:
            adj = adjoints[p.index] if p.index < len(adjoints) else None
            out.append(np.zeros_like(p.value) if adj is None else np.asarray(adj).reshape(p.value.shape))
        return out


def parameter_gradient(trace: GradientTrace, loss: Node) -> np.ndarray:
    """Flat gradient of ``loss`` with respect to every parameter on ``trace``."""
    grads = trace.gradient(loss)
    if not grads:
        return np.zeros(0)
    return np.concatenate([g.ravel() for g in grads])


def value_of(x) -> np.ndarray:
    return x.value if isinstance(x, Node) else np.asarray(x, dtype=float)


def trace_of(*xs) -> GradientTrace | None:
    trace = None
    for x in xs:
        if isinstance(x, Node):
            if trace is None:
                trace = x.trace
            elif x.trace is not trace:
                raise TraceError(f"operands belong to different traces ({trace.id} and {x.trace.id})")
    return trace


def unbroadcast(adj: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``adj`` down to ``shape`` (inverse of numpy broadcasting)."""
    if adj.shape == shape:
        return adj
    extra = adj.ndim - len(shape)
    if extra > 0:
        adj = adj.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and adj.shape[i] != 1)
    if axes:
        adj = adj.sum(axis=axes, keepdims=True)
    return adj.reshape(shape)


def add(a, b):
    av, bv = value_of(a), value_of(b)
    out = av + bv
    trace = trace_of(a, b)
    if trace is None:
        return out
    return trace.record(
        out, (a, b), lambda g: (unbroadcast(g, av.shape), unbroadcast(g, bv.shape))
    )


def sub(a, b):
    av, bv = value_of(a), value_of(b)
    out = av - bv
    trace = trace_of(a, b)
    if trace is None:
        return out
    return trace.record(
        out, (a, b), lambda g: (unbroadcast(g, av.shape), unbroadcast(-g, bv.shape))
    )


def mul(a, b):
    av, bv = value_of(a), value_of(b)
    out = av * bv
    trace = trace_of(a, b)
    if trace is None:
        return out
    return trace.record(
        out,
        (a, b),
        lambda g: (
            unbroadcast(g * bv, av.shape) if isinstance(a, Node) else None,
            unbroadcast(g * av, bv.shape) if isinstance(b, Node) else None,
        ),
    )


def div(a, b):
    av, bv = value_of(a), value_of(b)
    if np.any(bv == 0.0):
        raise DomainError("division by zero")
    out = av / bv
    trace = trace_of(a, b)
    if trace is None:
        return out
    return trace.record(
        out,
        (a, b),
        lambda g: (
            unbroadcast(g / bv, av.shape) if isinstance(a, Node) else None,
            unbroadcast(-g * out / bv, bv.shape) if isinstance(b, Node) else None,
        ),
    )


def neg(a):
    if not isinstance(a, Node):
        return -np.asarray(a, dtype=float)
    return a.trace.record(-a.value, (a,), lambda g: (-g,))


def square(a):
    av = value_of(a)
    if not isinstance(a, Node):
        return av * av
    return a.trace.record(av * av, (a,), lambda g: (2.0 * g * av,))


def reduce_sum(a, axis=None):
    av = value_of(a)
    out = np.asarray(av.sum(axis=axis))
    if not isinstance(a, Node):
        return out

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, av.shape),)

    return a.trace.record(out, (a,), backward)


def getitem(a, idx):
    av = value_of(a)
    out = av[idx]
    if not isinstance(a, Node):
        return out

    def backward(g):
        full = np.zeros_like(av)
        full[idx] = g
        return (full,)

    return a.trace.record(out, (a,), backward)


def linear(x, weight, bias=None, bias_rows=None):
    """``x @ weight.T`` over the last axis, with an optional bias.

    ``bias_rows`` restricts the bias to a leading-axis slice of the output
    (jets add biases to their value component only).
    """
    xv, wv = value_of(x), value_of(weight)
    if xv.shape[-1] != wv.shape[1]:
        raise ValueError(f"dimension mismatch: input has {xv.shape[-1]} features, weight expects {wv.shape[1]}")
    lead = xv.shape[:-1]
    x2 = xv.reshape(-1, xv.shape[-1])
    out = (x2 @ wv.T).reshape(lead + (wv.shape[0],))
    bv = None
    if bias is not None:
        bv = value_of(bias)
        if bias_rows is None:
            out += bv
        else:
            out[bias_rows] += bv
    trace = trace_of(x, weight, bias)
    if trace is None:
        return out

    def backward(g):
        g2 = g.reshape(-1, g.shape[-1])
        gx = (g2 @ wv).reshape(xv.shape) if isinstance(x, Node) else None
        gw = g2.T @ x2 if isinstance(weight, Node) else None
        gb = None
        if isinstance(bias, Node):
            gsel = g if bias_rows is None else g[bias_rows]
            gb = gsel.reshape(-1, g.shape[-1]).sum(axis=0)
        return gx, gw, gb

    return trace.record(out, (x, weight, bias), backward)
