"""Max-affine under-approximation of convex targets by grid tangent planes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .affine import MaxAffineFn
from .errors import ValidationError

FD_STEP = 1e-6
BOUND_CONSTANT = 72.0


@dataclass(frozen=True)
class ConvexTarget:
    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    subgradient: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""

    def evaluate(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        return np.asarray(self.evaluator(xs), dtype=np.float64).reshape(-1)

    def subgradients(self, xs) -> np.ndarray:
        """Analytic subgradients when available, else central differences."""
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        if self.subgradient is not None:
            return np.asarray(self.subgradient(xs), dtype=np.float64).reshape(xs.shape)
        grads = np.empty_like(xs)
        for i in range(self.dim):
            step = np.zeros(self.dim)
            step[i] = FD_STEP
            grads[:, i] = (self.evaluate(xs + step) - self.evaluate(xs - step)) / (2 * FD_STEP)
        return grads


def grid_side(k: int, d: int) -> int:
    """Largest m with m**d <= k."""
    m = max(1, int(round(k ** (1.0 / d))))
    while m**d > k:
        m -= 1
    while (m + 1) ** d <= k:
        m += 1
    return m


def cell_centers(m: int, d: int) -> np.ndarray:
    axis = (np.arange(m) + 0.5) / m
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def fit_max_affine(t: ConvexTarget, k: int) -> MaxAffineFn:
    """Max of the tangent planes at the centers of an m^d grid, m^d <= k."""
    if k < 1:
        raise ValidationError(f"k must be at least 1, got {k}")
    centers = cell_centers(grid_side(k, t.dim), t.dim)
    values = t.evaluate(centers)
    slopes = t.subgradients(centers)
    offsets = values - np.einsum("ij,ij->i", slopes, centers)
    return MaxAffineFn(slopes, offsets)


def max_affine_error_bound(lipschitz: float, d: int, k: int) -> float:
    """``72 L d^{3/2} k^{-2/d}``."""
    return BOUND_CONSTANT * lipschitz * d**1.5 * k ** (-2.0 / d)


def loglog_slope(ks, errors) -> float:
    """Least-squares slope of log(error) against log(k)."""
    return float(np.polyfit(np.log(np.asarray(ks, float)), np.log(np.asarray(errors, float)), 1)[0])
