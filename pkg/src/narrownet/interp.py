"""Piecewise-linear interpolation on the Kuhn triangulation of a uniform grid.

Cell ``c`` of the grid with spacing 1/n is split into d! simplices, one per
ordering ``perm`` of the coordinates: the simplex holds the points whose
fractional coordinates satisfy ``t[perm[0]] >= t[perm[1]] >= ...``. Its
vertices are ``c``, ``c + e_perm[0]``, ``c + e_perm[0] + e_perm[1]``, ...
"""

from __future__ import annotations

import itertools
import logging
import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .affine import MaxAffineFn, _frozen
from .errors import BudgetError, DimensionError, ParseError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_VERTEX_BUDGET = 2**24
BUDGET_ENV = "NARROWNET_BUDGET"


def vertex_budget(override: int | None = None) -> int:
    if override is not None:
        return override
    raw = os.environ.get(BUDGET_ENV)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
    return DEFAULT_VERTEX_BUDGET


@dataclass(frozen=True)
class TargetFn:
    """A black-box function on [0,1]^d; ``evaluator`` maps (k, d) arrays to (k,)."""

    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    lipschitz: float | None = None
    name: str = ""

    def evaluate(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        return np.asarray(self.evaluator(xs), dtype=np.float64).reshape(-1)


def lattice_points(d: int, n: int) -> np.ndarray:
    """The (n+1)^d grid vertices in lexicographic order, as rows."""
    axis = np.arange(n + 1) / n
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def lattice_indices(d: int, n: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(n + 1)] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True, eq=False)
class SimplicialInterpolant:
    """Values on the (n+1)^d lattice, extended affinely on each Kuhn simplex."""

    dim: int
    resolution: int
    vertex_values: np.ndarray

    def __post_init__(self):
        d, n = self.dim, self.resolution
        if d < 1 or n < 1:
            raise ValidationError("dimension and resolution must be positive")
        vals = _frozen(np.asarray(self.vertex_values, dtype=np.float64).reshape(-1), 1, "vertex_values")
        if vals.shape[0] != (n + 1) ** d:
            raise ValidationError(f"expected {(n + 1) ** d} vertex values, got {vals.shape[0]}")
        vals = vals.reshape((n + 1,) * d)
        object.__setattr__(self, "vertex_values", vals)

    @property
    def spacing(self) -> float:
        return 1.0 / self.resolution

    @property
    def strides(self) -> np.ndarray:
        d, n = self.dim, self.resolution
        return np.array([(n + 1) ** (d - 1 - i) for i in range(d)], dtype=np.int64)

    def evaluate(self, xs, return_clamped: bool = False):
        """Batch Kuhn evaluation; points outside the cube are clamped."""
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        d, n = self.dim, self.resolution
        if xs.shape[1] != d:
            raise DimensionError(f"expected points of length {d}, got {xs.shape[1]}")
        clipped = np.clip(xs, 0.0, 1.0)
        clamped = np.any(clipped != xs, axis=1)
        y = clipped * n
        cell = np.clip(np.floor(y), 0, n - 1).astype(np.int64)
        t = y - cell
        order = np.argsort(-t, axis=1, kind="stable")
        ts = np.take_along_axis(t, order, axis=1)
        flat = self.vertex_values.ravel()
        strides = self.strides
        idx = cell @ strides
        out = (1.0 - ts[:, 0]) * flat[idx]
        for k in range(d):
            idx = idx + strides[order[:, k]]
            weight = ts[:, k] - ts[:, k + 1] if k + 1 < d else ts[:, k]
            out = out + weight * flat[idx]
        if return_clamped:
            return out, clamped
        return out

    def __call__(self, x) -> float:
        return eval_interpolant(self, x)

    def with_values(self, values: np.ndarray) -> SimplicialInterpolant:
        return SimplicialInterpolant(self.dim, self.resolution, values)


def eval_interpolant(p: SimplicialInterpolant, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.dim,):
        raise DimensionError(f"expected a point of length {p.dim}, got shape {x.shape}")
    val, clamped = p.evaluate(x[None, :], return_clamped=True)
    if clamped[0]:
        log.warning("point %s lies outside [0,1]^%d and was clamped", x.tolist(), p.dim)
    return float(val[0])


def grid_resolution(lipschitz: float, d: int, eps: float) -> int:
    """Cells per axis so that the Kuhn simplex diameter sqrt(d)/n is <= eps/L."""
    return max(1, math.ceil(lipschitz * math.sqrt(d) / eps))


def build_interpolant(
    f: TargetFn, eps: float, budget: int | None = None
) -> SimplicialInterpolant:
    """Sample ``f`` on a lattice fine enough that ``|f - f_eps| <= eps`` on the cube."""
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    if f.lipschitz is None or not f.lipschitz > 0:
        raise ValidationError("a positive Lipschitz constant is required to size the grid")
    n = grid_resolution(f.lipschitz, f.dim, eps)
    return sample_interpolant(f, n, budget)


def sample_interpolant(f: TargetFn, n: int, budget: int | None = None) -> SimplicialInterpolant:
    count = (n + 1) ** f.dim
    limit = vertex_budget(budget)
    if count > limit:
        raise BudgetError(
            f"grid with n={n} in dimension {f.dim} needs {count} vertices, budget is {limit}"
        )
    values = f.evaluate(lattice_points(f.dim, n))
    return SimplicialInterpolant(f.dim, n, values)


def simplex_count_formula(d: int, modulus: float) -> float:
    """The literal count d!/w^d of simplices with scale w (reported, not used)."""
    return math.factorial(d) / modulus**d


# --- Kuhn complex geometry ---------------------------------------------------


def kuhn_permutations(d: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(d)))


def cell_indices(d: int, n: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(n)] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def simplex_gradients(p: SimplicialInterpolant) -> np.ndarray:
    """Gradient of ``p`` on every simplex; shape (d!, n^d, d).

    Axis 0 follows ``kuhn_permutations``, axis 1 follows ``cell_indices``.
    """
    d, n = p.dim, p.resolution
    flat = p.vertex_values.ravel()
    strides = p.strides
    base = cell_indices(d, n) @ strides
    perms = kuhn_permutations(d)
    grads = np.empty((len(perms), base.shape[0], d))
    for i, perm in enumerate(perms):
        idx = base
        for axis in perm:
            nxt = idx + strides[axis]
            grads[i, :, axis] = (flat[nxt] - flat[idx]) * n
            idx = nxt
    return grads


def simplex_pieces(p: SimplicialInterpolant) -> MaxAffineFn:
    """The affine function of every simplex, as rows of a MaxAffineFn.

    The max of these rows equals ``p`` only when ``p`` is convex.
    """
    d, n = p.dim, p.resolution
    grads = simplex_gradients(p)
    cells = cell_indices(d, n)
    base_vals = p.vertex_values.ravel()[cells @ p.strides]
    offsets = base_vals[None, :] - np.einsum("pcd,cd->pc", grads, cells / n)
    return MaxAffineFn(grads.reshape(-1, d), offsets.reshape(-1))


def simplex_vertices(d: int, n: int, cell: np.ndarray, perm: tuple[int, ...]) -> np.ndarray:
    """Coordinates of the d+1 vertices of one simplex, as rows."""
    verts = [np.asarray(cell, dtype=np.int64)]
    for axis in perm:
        nxt = verts[-1].copy()
        nxt[axis] += 1
        verts.append(nxt)
    return np.array(verts) / n


# --- vertex-value files ------------------------------------------------------


def dump_vertex_values(p: SimplicialInterpolant) -> str:
    """Header line ``d n`` then one value per line in lexicographic lattice order."""
    lines = [f"{p.dim} {p.resolution}"]
    lines.extend(repr(float(v)) for v in p.vertex_values.ravel())
    return "\n".join(lines) + "\n"


def load_vertex_values(text: str) -> SimplicialInterpolant:
    tokens = text.split()
    if len(tokens) < 2:
        raise ParseError("header", "expected 'd n' at the start of the file")
    try:
        d, n = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise ParseError("header", f"expected two integers, got {tokens[:2]}") from None
    if d < 1 or n < 1:
        raise ParseError("header", "dimension and resolution must be positive")
    body = tokens[2:]
    if len(body) != (n + 1) ** d:
        raise ParseError("values", f"expected {(n + 1) ** d} values, got {len(body)}")
    try:
        vals = np.array([float(tok) for tok in body])
    except ValueError as exc:
        raise ParseError("values", str(exc)) from None
    if not np.all(np.isfinite(vals)):
        raise ParseError("values", "non-finite entry")
    return SimplicialInterpolant(d, n, vals)
