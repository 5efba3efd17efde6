"""Feed-forward ReLU networks: evaluation, size accounting and the net file format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

import numpy as np

from .affine import AffineMap, apply_affine
from .errors import DimensionError, ParseError, ValidationError

FORMAT_VERSION = 1

# Provenance keys marking structural layers that are not counted as hidden blocks.
TAG_EMBEDDING = "input_embedding"
TAG_READOUT = "readout"


class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class Layer:
    map: AffineMap
    activation: Activation = Activation.RELU

    def __post_init__(self):
        object.__setattr__(self, "activation", Activation(self.activation))


@dataclass(frozen=True)
class NetMetrics:
    input_dim: int
    output_dim: int
    hidden_width: int
    relu_depth: int
    hidden_blocks: int
    parameter_count: int

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class ReluNet:
    """A chain of affine layers, each followed by ReLU except possibly the last.

    ``provenance`` is a free-form string map. The keys ``input_embedding`` and
    ``readout`` (value ``"true"``) tag the first and last layer as structural,
    which removes them from ``hidden_blocks``.
    """

    input_dim: int
    layers: tuple[Layer, ...]
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(
            self, "provenance", {str(k): str(v) for k, v in dict(self.provenance).items()}
        )
        if self.input_dim < 1:
            raise ValidationError("input_dim must be positive")
        if not layers:
            raise ValidationError("a net needs at least one layer")
        prev = self.input_dim
        for j, layer in enumerate(layers):
            if layer.map.cols != prev:
                raise ValidationError(
                    f"layer {j} expects {layer.map.cols} inputs but receives {prev}"
                )
            if layer.activation is Activation.LINEAR and j != len(layers) - 1:
                raise ValidationError(f"layer {j}: only the last layer may be linear")
            prev = layer.map.rows

    @property
    def output_dim(self) -> int:
        return self.layers[-1].map.rows

    @property
    def hidden_width(self) -> int:
        if len(self.layers) < 2:
            return 0
        return max(layer.map.rows for layer in self.layers[:-1])

    @property
    def relu_depth(self) -> int:
        return sum(layer.activation is Activation.RELU for layer in self.layers)

    def _tag(self, key: str) -> bool:
        return self.provenance.get(key, "false") == "true"

    @property
    def hidden_blocks(self) -> int:
        blocks = self.relu_depth
        if self._tag(TAG_EMBEDDING) and self.layers[0].activation is Activation.RELU:
            blocks -= 1
        if self._tag(TAG_READOUT) and self.layers[-1].activation is Activation.RELU:
            blocks -= 1
        return blocks

    @property
    def parameter_count(self) -> int:
        return sum(l.map.rows * l.map.cols + l.map.rows for l in self.layers)

    def metrics(self) -> NetMetrics:
        return NetMetrics(
            input_dim=self.input_dim,
            output_dim=self.output_dim,
            hidden_width=self.hidden_width,
            relu_depth=self.relu_depth,
            hidden_blocks=self.hidden_blocks,
            parameter_count=self.parameter_count,
        )

    def __call__(self, x) -> np.ndarray:
        return eval_net(self, x)


def _forward(
    net: ReluNet, xs: np.ndarray, keep: bool, pre: bool = False
) -> tuple[np.ndarray, list[np.ndarray]]:
    trace = []
    h = xs
    for layer in net.layers:
        h = apply_affine(layer.map.weights, layer.map.bias, h)
        if keep and pre:
            trace.append(h.copy())
        if layer.activation is Activation.RELU:
            np.maximum(h, 0.0, out=h)
        if keep and not pre:
            trace.append(h)
    return h, trace


def _as_batch(net: ReluNet, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        return xs.reshape(0, net.input_dim)
    if xs.ndim == 1 and net.input_dim == 1:
        xs = xs[:, None]
    if xs.ndim != 2 or xs.shape[1] != net.input_dim:
        raise DimensionError(f"expected points of length {net.input_dim}, got shape {xs.shape}")
    return xs


def eval_net(net: ReluNet, x) -> np.ndarray:
    """Evaluate ``net`` at a single point; returns the output vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise DimensionError(f"expected a point of length {net.input_dim}, got shape {x.shape}")
    out, _ = _forward(net, x[None, :], keep=False)
    return out[0]


def eval_batch(net: ReluNet, xs) -> np.ndarray:
    """Evaluate ``net`` on each row of ``xs``; shape (k, output_dim).

    Row results are bitwise identical to ``eval_net`` on the same row.
    """
    xs = _as_batch(net, xs)
    if xs.shape[0] == 0:
        return np.empty((0, net.output_dim))
    out, _ = _forward(net, xs, keep=False)
    return out


def trace_batch(net: ReluNet, xs, pre: bool = False) -> list[np.ndarray]:
    """Per-layer values for instrumented checks.

    Post-activation by default; ``pre=True`` returns the affine outputs before
    the ReLU is applied.
    """
    _, trace = _forward(net, _as_batch(net, xs), keep=True, pre=pre)
    return trace


# --- serialization -----------------------------------------------------------


def net_to_dict(net: ReluNet) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "input_dim": net.input_dim,
        "layers": [
            {
                "rows": layer.map.rows,
                "cols": layer.map.cols,
                # json writes floats with repr(), the shortest round-trip form
                "weights": layer.map.weights.ravel().tolist(),
                "bias": layer.map.bias.tolist(),
                "activation": layer.activation.value,
            }
            for layer in net.layers
        ],
        "provenance": dict(sorted(net.provenance.items())),
    }


def serialize(net: ReluNet) -> str:
    return json.dumps(net_to_dict(net), indent=1, allow_nan=False) + "\n"


def _reals(value, name: str, length: int) -> np.ndarray:
    if not isinstance(value, list):
        raise ParseError(name, "expected a list of numbers")
    if len(value) != length:
        raise ParseError(name, f"expected {length} entries, got {len(value)}")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(name, f"non-numeric entry {v!r}")
    arr = np.array(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ParseError(name, "non-finite entry")
    return arr


def _int(doc: Mapping, key: str, where: str) -> int:
    if key not in doc:
        raise ParseError(f"{where}{key}", "missing")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ParseError(f"{where}{key}", f"expected a positive integer, got {v!r}")
    return v


def net_from_dict(doc: Any) -> ReluNet:
    if not isinstance(doc, dict):
        raise ParseError("<root>", "expected an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParseError("format_version", f"unsupported value {doc.get('format_version')!r}")
    input_dim = _int(doc, "input_dim", "")
    raw_layers = doc.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ParseError("layers", "expected a nonempty list")
    layers = []
    for j, raw in enumerate(raw_layers):
        where = f"layers[{j}]."
        if not isinstance(raw, dict):
            raise ParseError(f"layers[{j}]", "expected an object")
        rows = _int(raw, "rows", where)
        cols = _int(raw, "cols", where)
        weights = _reals(raw.get("weights"), where + "weights", rows * cols).reshape(rows, cols)
        raw_bias = raw.get("bias")
        if isinstance(raw_bias, list) and len(raw_bias) != rows:
            raise ValidationError(f"{where}bias: length {len(raw_bias)} does not match rows {rows}")
        bias = _reals(raw_bias, where + "bias", rows)
        act = raw.get("activation")
        if act not in ("relu", "linear"):
            raise ParseError(where + "activation", f"expected 'relu' or 'linear', got {act!r}")
        layers.append(Layer(AffineMap(weights, bias), Activation(act)))
    prov = doc.get("provenance", {})
    if not isinstance(prov, dict):
        raise ParseError("provenance", "expected an object")
    return ReluNet(input_dim, tuple(layers), prov)


def deserialize(text: str) -> ReluNet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", f"invalid JSON: {exc}") from None
    return net_from_dict(doc)

