"""Gated network with a payoff-anchored softplus output.

Layer recursion, for ``l = 1..L`` (all activations ``tanh``)::

    X1      = tanh(W1 x + b1)
    Z, G, R = tanh(U^{z,g,r} x + W^{z,g,r} X + b^{z,g,r})
    H       = tanh(U^h x + W^h (X * R) + b^h)
    X       = (1 - G) * H + Z * X
    f       = (S - K exp(-r t))^+ + softplus(W X + b)

The flat parameter vector is laid out as ``W1, b1``, then per layer the four
gate input matrices ``U`` stacked in gate order ``z, g, r, h`` (shape
``(4D, d)``), the stacked recurrent matrices ``W`` (``(4D, D)``) and the
stacked biases (``4D``), and finally the output ``W`` (``(1, D)``) and ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import GradientTrace, Jet, jet_linear

GATES = ("z", "g", "r", "h")


def param_count(d: int, D: int, L: int) -> int:
    return D * d + D + L * 4 * (D * d + D * D + D) + D + 1


def _layout(d: int, D: int, L: int) -> list[tuple[str, tuple]]:
    blocks = [("in.W", (D, d)), ("in.b", (D,))]
    for l in range(L):
        blocks += [(f"gate{l}.U", (4 * D, d)), (f"gate{l}.W", (4 * D, D)), (f"gate{l}.b", (4 * D,))]
    blocks += [("out.W", (1, D)), ("out.b", (1,))]
    return blocks


@dataclass(frozen=True)
class NetworkParams:
    """Weights of the gated network plus the data of its payoff anchor.

    ``anchor_time`` is the fixed time to maturity used in the anchor; ``None``
    means time is the last input coordinate and the anchor reads it.
    """

    d: int
    D: int
    L: int
    theta: np.ndarray
    K: float = 1.0
    r: float = 0.05
    anchor_time: float | None = 0.0
    anchor: bool = True

    def __post_init__(self):
        if self.d < 1 or self.D < 1 or self.L < 1:
            raise ValueError(f"need d, D, L >= 1, got d={self.d}, D={self.D}, L={self.L}")
        theta = np.asarray(self.theta, dtype=float).ravel()
        if theta.size != param_count(self.d, self.D, self.L):
            raise ValueError(
                f"parameter vector has {theta.size} entries, expected {param_count(self.d, self.D, self.L)}"
            )
        object.__setattr__(self, "theta", theta)

    @property
    def size(self) -> int:
        return self.theta.size

    @property
    def time_input(self) -> bool:
        return self.anchor_time is None

    def with_theta(self, theta) -> "NetworkParams":
        return NetworkParams(self.d, self.D, self.L, np.array(theta, dtype=float),
                             self.K, self.r, self.anchor_time, self.anchor)

    def with_anchor_time(self, t: float | None) -> "NetworkParams":
        return NetworkParams(self.d, self.D, self.L, self.theta, self.K, self.r, t, self.anchor)

    def blocks(self) -> dict[str, np.ndarray]:
        """Named views into ``theta``."""
        out, offset = {}, 0
        for name, shape in _layout(self.d, self.D, self.L):
            n = int(np.prod(shape))
            out[name] = self.theta[offset : offset + n].reshape(shape)
            offset += n
        return out

    def weights(self) -> dict:
        """Frozen weights for :func:`forward` (plain arrays, nothing recorded)."""
        return _split(self.blocks(), self.D, self.L, lambda a: a)

    def bind(self, trace: GradientTrace) -> dict:
        """Register the weights on ``trace``; the flat gradient follows ``theta`` order."""
        return _split(self.blocks(), self.D, self.L, trace.param)

    def __call__(self, x: Jet, weights=None) -> Jet:
        return forward(self, x, weights)


def _split(blocks, D, L, leaf):
    # Leaves are registered in theta order; every slice below is contiguous.
    w = {"W1": leaf(blocks["in.W"]), "b1": leaf(blocks["in.b"]), "layers": []}
    for l in range(L):
        U, W, b = blocks[f"gate{l}.U"], blocks[f"gate{l}.W"], blocks[f"gate{l}.b"]
        layer = {}
        layer["U_zgr"], layer["U_h"] = leaf(U[: 3 * D]), leaf(U[3 * D :])
        layer["W_zgr"], layer["W_h"] = leaf(W[: 3 * D]), leaf(W[3 * D :])
        layer["b_zgr"], layer["b_h"] = leaf(b[: 3 * D]), leaf(b[3 * D :])
        w["layers"].append(layer)
    w["W"] = leaf(blocks["out.W"])
    w["b"] = leaf(blocks["out.b"])
    return w


def init_params(d: int, D: int, L: int, seed: int = 0, K: float = 1.0, r: float = 0.05,
                anchor_time: float | None = 0.0, anchor: bool = True,
                output_bias: float = 0.0) -> NetworkParams:
    """Glorot-uniform weights, zero hidden biases; deterministic in ``seed``.

    ``output_bias`` sets the pre-softplus output bias, i.e. where the untrained
    network sits above its anchor (``softplus(output_bias)``).
    """
    if d < 1 or D < 1 or L < 1:
        raise ValueError(f"need d, D, L >= 1, got d={d}, D={D}, L={L}")
    rng = np.random.default_rng(seed)
    parts = []
    for name, shape in _layout(d, D, L):
        if name.endswith(".b"):
            parts.append(np.zeros(int(np.prod(shape))))
            continue
        if name.startswith("gate"):
            # stacked gates: each gate block has its own (D, fan_in) shape
            fan_in, fan_out = shape[1], D
        else:
            fan_in, fan_out = shape[1], shape[0]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        parts.append(rng.uniform(-limit, limit, size=int(np.prod(shape))))
    theta = np.concatenate(parts)
    theta[-1] = output_bias
    params = NetworkParams(d, D, L, theta, K, r, anchor_time, anchor)
    assert params.size == param_count(d, D, L)
    return params


def zero_params(d: int, D: int, L: int, **kw) -> NetworkParams:
    return NetworkParams(d, D, L, np.zeros(param_count(d, D, L)), **kw)


def payoff_anchor(params: NetworkParams, x: Jet) -> Jet:
    """``(S - K exp(-r t))^+`` as a jet in the inputs."""
    S = x[..., 0]
    if params.time_input:
        t = x[..., params.d - 1]
        return (S - (t * (-params.r)).exp() * params.K).positive_part()
    return (S - params.K * np.exp(-params.r * params.anchor_time)).positive_part()


def forward(params: NetworkParams, x: Jet, weights=None) -> Jet:
    """Evaluate the network on lifted inputs ``x`` of shape ``(..., d)``.

    Pass ``weights=params.bind(trace)`` to record parameter gradients.
    """
    if x.shape[-1] != params.d:
        raise ValueError(f"network expects {params.d} input coordinates, got {x.shape[-1]}")
    w = params.weights() if weights is None else weights
    D = params.D
    X = jet_linear(x, w["W1"], w["b1"]).tanh()
    for layer in w["layers"]:
        zgr = (jet_linear(x, layer["U_zgr"]) + jet_linear(X, layer["W_zgr"], layer["b_zgr"])).tanh()
        Z, G, R = zgr[..., :D], zgr[..., D : 2 * D], zgr[..., 2 * D :]
        H = (jet_linear(x, layer["U_h"]) + jet_linear(X * R, layer["W_h"], layer["b_h"])).tanh()
        X = (1.0 - G) * H + Z * X
    out = jet_linear(X, w["W"], w["b"]).softplus()[..., 0]
    if params.anchor:
        out = out + payoff_anchor(params, x)
    return out


def save_params(params: NetworkParams, path) -> None:
    """Text snapshot: header ``d D L K r anchor_time`` then one value per line.

    ``anchor_time`` is written as ``t`` when time is an input coordinate; a
    trailing ``noanchor`` token marks a network without the payoff anchor.
    """
    at = "t" if params.time_input else repr(float(params.anchor_time))
    header = f"{params.d} {params.D} {params.L} {float(params.K)!r} {float(params.r)!r} {at}"
    if not params.anchor:
        header += " noanchor"
    body = "\n".join(repr(float(v)) for v in params.theta)
    Path(path).write_text(header + "\n" + body + "\n")


def load_params(path) -> NetworkParams:
    lines = Path(path).read_text().split("\n")
    head = lines[0].split()
    if len(head) not in (6, 7):
        raise ValueError(f"{path}: malformed snapshot header {lines[0]!r}")
    d, D, L = (int(v) for v in head[:3])
    K, r = float(head[3]), float(head[4])
    anchor_time = None if head[5] == "t" else float(head[5])
    anchor = not (len(head) == 7 and head[6] == "noanchor")
    theta = np.array([float(v) for v in lines[1:] if v.strip()])
    return NetworkParams(d, D, L, theta, K, r, anchor_time, anchor)
