"""Builtin target functions and target-spec resolution for the command line."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .dc import DCFn, load_dc
from .deepen import ShallowNet, load_shallow
from .errors import ValidationError
from .fit import ConvexTarget
from .interp import SimplicialInterpolant, TargetFn, load_vertex_values

Batch = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Target:
    name: str
    dim: int
    evaluator: Batch
    lipschitz: float | None = None
    convex: bool = False
    subgradient: Batch | None = None
    kind: str = "builtin"
    source: Any = field(default=None, repr=False)

    def evaluate(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        return np.asarray(self.evaluator(xs), dtype=np.float64).reshape(-1)

    def as_target_fn(self) -> TargetFn:
        return TargetFn(self.dim, self.evaluator, self.lipschitz, self.name)

    def as_convex_target(self) -> ConvexTarget:
        if not self.convex:
            raise ValidationError(f"target {self.name!r} is not convex")
        if self.lipschitz is None:
            raise ValidationError(f"target {self.name!r} has no Lipschitz constant")
        return ConvexTarget(self.dim, self.evaluator, self.lipschitz, self.subgradient, self.name)


def _floats(raw: str) -> list[float]:
    return [float(v) for v in raw.split(",") if v.strip()]


def _affine(d: int, params: dict[str, str]) -> Target:
    a = np.array(_floats(params["a"])) if "a" in params else np.full(d, 1.0 / d)
    b = float(params.get("b", 0.0))
    if a.shape != (d,):
        raise ValidationError(f"affine: parameter a needs {d} entries, got {a.shape[0]}")
    return Target(
        "affine",
        d,
        lambda xs: xs @ a + b,
        lipschitz=float(np.linalg.norm(a)),
        convex=True,
        subgradient=lambda xs: np.broadcast_to(a, xs.shape).copy(),
    )


def _parabola(d: int, params) -> Target:
    return Target(
        "parabola", d, lambda xs: xs[:, 0] ** 2, 2.0, True,
        lambda xs: np.column_stack([2 * xs[:, 0]] + [np.zeros(len(xs))] * (d - 1)),
    )


def _norm2_sq(d: int, params) -> Target:
    return Target(
        "norm2-sq", d, lambda xs: (xs**2).sum(axis=1), 2.0 * math.sqrt(d), True,
        lambda xs: 2.0 * xs,
    )


def _hat(d: int, params) -> Target:
    return Target("hat", d, lambda xs: np.minimum(xs[:, 0], 1.0 - xs[:, 0]), 1.0, False)


def _first_axis_sign(xs: np.ndarray) -> np.ndarray:
    g = np.zeros_like(xs)
    g[:, 0] = np.where(xs[:, 0] >= 0.5, 1.0, -1.0)
    return g


def _hat_complement(d: int, params) -> Target:
    return Target(
        "hat-complement", d, lambda xs: np.maximum(xs[:, 0], 1.0 - xs[:, 0]), 1.0, True,
        _first_axis_sign,
    )


def _abs_diff_grad(xs: np.ndarray) -> np.ndarray:
    g = np.zeros_like(xs)
    s = np.where(xs[:, 0] >= xs[:, 1], 1.0, -1.0)
    g[:, 0] = s
    g[:, 1] = -s
    return g


def _abs_diff(d: int, params) -> Target:
    return Target(
        "abs-diff", d, lambda xs: np.abs(xs[:, 0] - xs[:, 1]), math.sqrt(2.0), True,
        _abs_diff_grad,
    )


def _sin2d(d: int, params) -> Target:
    return Target(
        "sin2d-positive",
        d,
        lambda xs: 0.5 + 0.5 * np.sin(np.pi * xs[:, 0]) * np.sin(np.pi * xs[:, 1]),
        math.pi / 2.0,
        False,
    )


# name -> (factory, min dim, max dim or None); Lipschitz constants are Euclidean.
REGISTRY: dict[str, tuple[Callable[[int, dict], Target], int, int | None]] = {
    "affine": (_affine, 1, None),
    "parabola": (_parabola, 1, 1),
    "norm2-sq": (_norm2_sq, 1, None),
    "hat": (_hat, 1, None),
    "hat-complement": (_hat_complement, 1, None),
    "abs-diff": (_abs_diff, 2, None),
    "sin2d-positive": (_sin2d, 2, 2),
}


def builtin(name: str, dim: int | None = None, params: dict[str, str] | None = None) -> Target:
    if name not in REGISTRY:
        raise ValidationError(f"unknown target {name!r}; builtins are {', '.join(sorted(REGISTRY))}")
    factory, lo, hi = REGISTRY[name]
    d = lo if dim is None else dim
    if d < lo or (hi is not None and d > hi):
        span = f"{lo}" if hi == lo else f">= {lo}" if hi is None else f"{lo}..{hi}"
        raise ValidationError(f"target {name!r} is defined for dimension {span}, not {d}")
    return factory(d, dict(params or {}))


def interpolant_target(p: SimplicialInterpolant, lipschitz: float | None, name: str) -> Target:
    return Target(name, p.dim, p.evaluate, lipschitz, False, kind="vertex-file", source=p)


def dc_target(f: DCFn, name: str) -> Target:
    convex = f.h.n_pieces == 1 and not f.h.slopes.any()
    return Target(name, f.dim, f.evaluate, None, convex, kind="dc-file", source=f)


def shallow_target(s: ShallowNet, name: str) -> Target:
    return Target(name, s.dim, s.evaluate, None, False, kind="shallow-file", source=s)


def resolve(
    spec: str,
    dim: int | None = None,
    params: dict[str, str] | None = None,
    lipschitz: float | None = None,
) -> Target:
    """Turn ``name`` or ``<kind>-file:<path>`` into a Target."""
    kind, sep, rest = spec.partition(":")
    if sep and kind in ("vertex-file", "dc-file", "shallow-file"):
        text = Path(rest).read_text()
        if kind == "vertex-file":
            t = interpolant_target(load_vertex_values(text), lipschitz, spec)
        elif kind == "dc-file":
            t = dc_target(load_dc(text), spec)
        else:
            t = shallow_target(load_shallow(text), spec)
        if dim is not None and dim != t.dim:
            raise ValidationError(f"{spec} has dimension {t.dim}, but --dim {dim} was given")
        return t
    t = builtin(spec, dim, params)
    if lipschitz is not None:
        t = Target(t.name, t.dim, t.evaluator, lipschitz, t.convex, t.subgradient)
    return t
