"""Trade width for depth: one hidden layer of width n becomes n+2 layers of width d+2."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .affine import AffineMap, MaxAffineFn, _frozen
from .dc import _pieces_from_list, _pieces_to_list
from .errors import ParseError, ValidationError
from .net import TAG_READOUT, Activation, Layer, ReluNet, net_from_dict


@dataclass(frozen=True, eq=False)
class ShallowNet:
    """``x -> ReLU(bias + sum_j coeffs[j] * ReLU(<a_j, x> + b_j))``.

    The hidden neurons are stored as a ``MaxAffineFn`` only for its
    slope/offset arrays; no maximum is taken. ``output_relu=False`` drops the
    outer ReLU.
    """

    hidden: MaxAffineFn
    coeffs: np.ndarray
    bias: float
    output_relu: bool = True

    def __post_init__(self):
        c = _frozen(self.coeffs, 1, "coeffs")
        if c.shape[0] != self.hidden.n_pieces:
            raise ValidationError(
                f"{self.hidden.n_pieces} hidden neurons but {c.shape[0]} coefficients"
            )
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "bias", float(self.bias))
        if not np.isfinite(self.bias):
            raise ValidationError("bias is not finite")

    @property
    def dim(self) -> int:
        return self.hidden.dim

    @property
    def width(self) -> int:
        return self.hidden.n_pieces

    def evaluate(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        pre = xs @ self.hidden.slopes.T + self.hidden.offsets
        out = self.bias + np.maximum(pre, 0.0) @ self.coeffs
        return np.maximum(out, 0.0) if self.output_relu else out

    def __call__(self, x) -> float:
        return float(self.evaluate(np.asarray(x, dtype=np.float64)[None, :])[0])


def certified_shift(s: ShallowNet) -> float:
    """T with ``T + sum_{j<=k} c_j ReLU(A_j(x)) >= 1`` for all k and cube x."""
    _, hi = s.hidden.piece_bounds()
    worst = np.maximum(-s.coeffs, 0.0) * np.maximum(hi, 0.0)
    return 1.0 + float(worst.sum())


def deepen(s: ShallowNet) -> ReluNet:
    """Width-(d+2) net with n+2 ReLU layers computing ``s`` on [0,1]^d.

    Channels: x copy, the current neuron ``ReLU(A_j(x))``, and an accumulator
    kept positive by the shift T.
    """
    d, n = s.dim, s.width
    t = certified_shift(s)
    a, b = s.hidden.slopes, s.hidden.offsets

    w = np.zeros((d + 2, d))
    w[:d] = np.eye(d)
    w[d] = a[0]
    bias = np.zeros(d + 2)
    bias[d] = b[0]
    bias[d + 1] = t
    layers = [Layer(AffineMap(w, bias))]

    for j in range(1, n + 1):
        w = np.zeros((d + 2, d + 2))
        w[:d, :d] = np.eye(d)
        bias = np.zeros(d + 2)
        if j < n:
            w[d, :d] = a[j]
            bias[d] = b[j]
        w[d + 1, d + 1] = 1.0
        w[d + 1, d] = s.coeffs[j - 1]
        layers.append(Layer(AffineMap(w, bias)))

    w = np.zeros((1, d + 2))
    w[0, d + 1] = 1.0
    act = Activation.RELU if s.output_relu else Activation.LINEAR
    layers.append(Layer(AffineMap(w, [s.bias - t]), act))

    provenance = {
        "compiler": "deepen",
        "shallow_width": str(n),
        "shift": repr(t),
        "domain": "equivalence holds on [0,1]^d only",
        TAG_READOUT: "true",
    }
    return ReluNet(d, tuple(layers), provenance)


# --- shallow net files -------------------------------------------------------


def shallow_to_dict(s: ShallowNet) -> dict[str, Any]:
    doc = {
        "dim": s.dim,
        "pieces": _pieces_to_list(s.hidden),
        "coeffs": s.coeffs.tolist(),
        "bias": s.bias,
    }
    if not s.output_relu:
        doc["output_relu"] = False
    return doc


def shallow_from_net(net: ReluNet) -> ShallowNet:
    if len(net.layers) != 2 or net.output_dim != 1:
        raise ValidationError("a shallow net has exactly two affine layers and one output")
    hidden, out = net.layers
    return ShallowNet(
        MaxAffineFn(hidden.map.weights, hidden.map.bias),
        out.map.weights[0],
        out.map.bias[0],
        output_relu=out.activation is Activation.RELU,
    )


def shallow_from_dict(doc: Any) -> ShallowNet:
    """Accept either the compact shallow document or a two-layer net document."""
    if not isinstance(doc, dict):
        raise ParseError("<root>", "expected an object")
    if "layers" in doc:
        return shallow_from_net(net_from_dict(doc))
    raw = doc.get("pieces")
    if not isinstance(raw, list) or not raw:
        raise ParseError("pieces", "expected a nonempty list of pieces")
    first = raw[0].get("a") if isinstance(raw[0], dict) else None
    d = doc.get("dim", len(first) if isinstance(first, list) else 0)
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ParseError("dim", f"expected a positive integer, got {d!r}")
    hidden = _pieces_from_list(raw, "pieces", d)
    coeffs = doc.get("coeffs")
    if not isinstance(coeffs, list) or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in coeffs
    ):
        raise ParseError("coeffs", "expected a list of numbers")
    bias = doc.get("bias")
    if isinstance(bias, bool) or not isinstance(bias, (int, float)):
        raise ParseError("bias", "expected a number")
    return ShallowNet(hidden, np.array(coeffs, dtype=np.float64), bias, bool(doc.get("output_relu", True)))


def load_shallow(text: str) -> ShallowNet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", f"invalid JSON: {exc}") from None
    return shallow_from_dict(doc)


def dump_shallow(s: ShallowNet) -> str:
    return json.dumps(shallow_to_dict(s), indent=1) + "\n"
