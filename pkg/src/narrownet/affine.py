"""Affine maps, affine functionals and max-affine functions on the unit cube."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionError, ValidationError

DEFAULT_TOL = 1e-9


def _frozen(arr, ndim: int, name: str) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True, ndmin=ndim)
    if out.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} contains non-finite entries")
    out.setflags(write=False)
    return out


def apply_affine(weights: np.ndarray, bias: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Apply ``x -> W x + b`` row-wise to a batch ``xs`` of shape (k, n).

    Accumulates column by column with elementwise operations only, so the
    result for a given row does not depend on the batch it was evaluated in.
    """
    m, n = weights.shape
    out = np.empty((xs.shape[0], m))
    out[:] = bias
    for j in range(n):
        out += xs[:, j : j + 1] * weights[:, j]
    return out


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> weights @ x + bias`` from R^cols to R^rows."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights, 2, "weights")
        b = _frozen(self.bias, 1, "bias")
        if w.shape[0] != b.shape[0]:
            raise ValidationError(
                f"weights has {w.shape[0]} rows but bias has length {b.shape[0]}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def identity(cls, n: int) -> AffineMap:
        return cls(np.eye(n), np.zeros(n))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.cols,):
            raise DimensionError(f"expected a point of length {self.cols}, got shape {x.shape}")
        return apply_affine(self.weights, self.bias, x[None, :])[0]


def compose_affine(outer: AffineMap, inner: AffineMap) -> AffineMap:
    """Return the map ``x -> outer(inner(x))``."""
    if outer.cols != inner.rows:
        raise DimensionError(
            f"cannot compose: outer takes {outer.cols} inputs, inner yields {inner.rows}"
        )
    return AffineMap(outer.weights @ inner.weights, outer.weights @ inner.bias + outer.bias)


@dataclass(frozen=True, eq=False)
class AffineFunctional:
    """``x -> <a, x> + b``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen(self.a, 1, "a"))
        b = float(self.b)
        if not np.isfinite(b):
            raise ValidationError("offset b is not finite")
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionError(f"expected a point of length {self.dim}, got shape {x.shape}")
        return float(np.dot(self.a, x) + self.b)


def cube_bounds(f: AffineFunctional, d: int | None = None) -> tuple[float, float]:
    """Exact (min, max) of an affine functional over [0,1]^d."""
    if d is None:
        d = f.dim
    if d < 1:
        raise ValidationError("dimension must be at least 1")
    if d != f.dim:
        raise DimensionError(f"functional has dimension {f.dim}, not {d}")
    lo = f.b + float(np.minimum(f.a, 0.0).sum())
    hi = f.b + float(np.maximum(f.a, 0.0).sum())
    return lo, hi


@dataclass(frozen=True, eq=False)
class MaxAffineFn:
    """Pointwise maximum of finitely many affine functionals.

    Stored as a coefficient matrix ``slopes`` (N x d) and ``offsets`` (N,).
    """

    slopes: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        s = _frozen(self.slopes, 2, "slopes")
        o = _frozen(self.offsets, 1, "offsets")
        if s.shape[0] == 0:
            raise ValidationError("a max-affine function needs at least one piece")
        if s.shape[0] != o.shape[0] or s.shape[1] < 1:
            raise ValidationError(f"slopes shape {s.shape} does not match offsets {o.shape}")
        object.__setattr__(self, "slopes", s)
        object.__setattr__(self, "offsets", o)

    @classmethod
    def from_pieces(cls, pieces: Sequence[AffineFunctional]) -> MaxAffineFn:
        if not pieces:
            raise ValidationError("a max-affine function needs at least one piece")
        dims = {p.dim for p in pieces}
        if len(dims) != 1:
            raise DimensionError(f"pieces have mixed dimensions {sorted(dims)}")
        return cls(np.stack([p.a for p in pieces]), np.array([p.b for p in pieces]))

    @classmethod
    def zero(cls, d: int) -> MaxAffineFn:
        return cls(np.zeros((1, d)), np.zeros(1))

    @property
    def dim(self) -> int:
        return self.slopes.shape[1]

    @property
    def n_pieces(self) -> int:
        return self.slopes.shape[0]

    @property
    def pieces(self) -> list[AffineFunctional]:
        return [AffineFunctional(a, b) for a, b in zip(self.slopes, self.offsets)]

    def piece(self, i: int) -> AffineFunctional:
        return AffineFunctional(self.slopes[i], self.offsets[i])

    def shifted(self, c: float) -> MaxAffineFn:
        return MaxAffineFn(self.slopes, self.offsets + c)

    def piece_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-piece exact (lo, hi) over the cube, vectorized ``cube_bounds``."""
        lo = self.offsets + np.minimum(self.slopes, 0.0).sum(axis=1)
        hi = self.offsets + np.maximum(self.slopes, 0.0).sum(axis=1)
        return lo, hi

    def __call__(self, x) -> float:
        return eval_max_affine(self, x)

    def evaluate(self, xs) -> np.ndarray:
        """Batch evaluation over rows of ``xs``."""
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        if xs.shape[1] != self.dim:
            raise DimensionError(f"expected points of length {self.dim}, got {xs.shape[1]}")
        return (xs @ self.slopes.T + self.offsets).max(axis=1)


def eval_max_affine(f: MaxAffineFn, x) -> float:
    """Value of ``f`` at a single point by a direct scan over the pieces."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (f.dim,):
        raise DimensionError(f"expected a point of length {f.dim}, got shape {x.shape}")
    best = -np.inf
    for a, b in zip(f.slopes, f.offsets):
        v = float(np.dot(a, x) + b)
        if v > best:
            best = v
    return best


def dedup_pieces(f: MaxAffineFn, decimals: int | None = None) -> MaxAffineFn:
    """Drop exact duplicate pieces, keeping first occurrences in order.

    With ``decimals`` set, pieces are compared after rounding to that many
    decimal places; the retained coefficients are the unrounded originals.
    """
    coeffs = np.column_stack([f.slopes, f.offsets])
    key = coeffs if decimals is None else np.round(coeffs, decimals) + 0.0
    _, first = np.unique(key, axis=0, return_index=True)
    keep = np.sort(first)
    return MaxAffineFn(f.slopes[keep], f.offsets[keep])


def max_affine_cube_min(f: MaxAffineFn) -> float:
    """Minimum of ``f`` over [0,1]^d, solved as a linear program.

    minimize t subject to <a_i, x> + b_i <= t and 0 <= x <= 1.
    """
    lo, _ = f.piece_bounds()
    if f.n_pieces == 1:
        return float(lo[0])
    d = f.dim
    c = np.zeros(d + 1)
    c[-1] = 1.0
    a_ub = np.column_stack([f.slopes, -np.ones(f.n_pieces)])
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=-f.offsets,
        bounds=[(0.0, 1.0)] * d + [(None, None)],
        method="highs",
    )
    if not res.success:  # pragma: no cover - bounded feasible LP
        raise RuntimeError(f"cube minimum LP failed: {res.message}")
    # Value attained at the LP minimizer: never below the true minimum.
    return f(np.clip(res.x[:d], 0.0, 1.0))


def vertices_of_cube(d: int) -> np.ndarray:
    """All 2^d vertices of [0,1]^d as rows."""
    grids = np.meshgrid(*([np.array([0.0, 1.0])] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)

