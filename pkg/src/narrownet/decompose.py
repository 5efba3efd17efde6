"""Convexity checks and DC splits of interpolants on the Kuhn complex.

Every facet of the Kuhn complex at resolution n lies on an axis plane
``x_i = k/n`` or a difference plane ``x_i - x_j = m/n``. Adding
``lam * sum |<a, x> - b|`` over all of them puts a slope jump of
``2 * lam * |a|`` on every facet, so a large enough ``lam`` turns any
interpolant convex while keeping it affine on each simplex.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .affine import MaxAffineFn, dedup_pieces
from .dc import DCFn
from .errors import BudgetError
from .interp import (
    SimplicialInterpolant,
    cell_indices,
    kuhn_permutations,
    lattice_indices,
    simplex_gradients,
    simplex_pieces,
)

log = logging.getLogger(__name__)

JUMP_TOL = 1e-12
DEFAULT_PIECE_BUDGET = 2**21
MAX_DOUBLINGS = 64


@dataclass(frozen=True)
class Hyperplane:
    """``<a, x> = offset / n`` with an integer normal ``a``."""

    a: tuple[int, ...]
    offset: int
    n: int

    @property
    def b(self) -> float:
        return self.offset / self.n

    def contains(self, pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        return np.abs(np.asarray(pts) @ np.array(self.a) - self.b) <= tol


def crease_set(d: int, n: int) -> list[Hyperplane]:
    """All hyperplanes that can carry a crease of a Kuhn interpolant."""
    planes = []
    for i in range(d):
        a = tuple(1 if q == i else 0 for q in range(d))
        planes.extend(Hyperplane(a, k, n) for k in range(1, n))
    for i in range(d):
        for j in range(i + 1, d):
            a = tuple(1 if q == i else (-1 if q == j else 0) for q in range(d))
            planes.extend(Hyperplane(a, m, n) for m in range(-(n - 1), n))
    return planes


@dataclass(frozen=True)
class Facet:
    """An interior facet: ``plane`` separates ``(cell_neg, perm_neg)`` from
    ``(cell_pos, perm_pos)``, the latter on the side the normal points to."""

    plane: Hyperplane
    cell_neg: tuple[int, ...]
    perm_neg: tuple[int, ...]
    cell_pos: tuple[int, ...]
    perm_pos: tuple[int, ...]


@dataclass(frozen=True)
class ConvexityVerdict:
    convex: bool
    min_jump: float
    witness: Facet | None = None
    jumps: np.ndarray = field(default=None, repr=False)

    def __bool__(self) -> bool:
        return self.convex


def facet_jumps(p: SimplicialInterpolant) -> tuple[np.ndarray, list]:
    """Normal slope jump across every interior facet.

    Returns the jumps and, aligned with them, lazy facet descriptors
    ``(kind, ...)`` used to build a witness on demand.
    """
    d, n = p.dim, p.resolution
    grads = simplex_gradients(p)
    perms = kuhn_permutations(d)
    perm_pos = {perm: i for i, perm in enumerate(perms)}
    cells = cell_indices(d, n)
    cell_stride = np.array([n ** (d - 1 - i) for i in range(d)], dtype=np.int64)
    jumps, refs = [], []

    # facets inside a cell: t[perm[k]] == t[perm[k+1]]
    for i, perm in enumerate(perms):
        for k in range(d - 1):
            u, v = perm[k], perm[k + 1]
            if u > v:
                continue
            swapped = list(perm)
            swapped[k], swapped[k + 1] = v, u
            q = perm_pos[tuple(swapped)]
            diff = grads[i] - grads[q]
            jumps.append((diff[:, u] - diff[:, v]) / math.sqrt(2.0))
            refs.append(("diff", i, q, u, v))

    # facets between cell c and c + e_axis
    for i, perm in enumerate(perms):
        axis = perm[0]
        q = perm_pos[perm[1:] + (axis,)]
        inner = np.nonzero(cells[:, axis] < n - 1)[0]
        if inner.size == 0:
            continue
        nbr = inner + cell_stride[axis]
        jumps.append(grads[q, nbr, axis] - grads[i, inner, axis])
        refs.append(("axis", i, q, axis, inner))

    if not jumps:
        return np.empty(0), []
    return np.concatenate(jumps), refs


def _witness(p: SimplicialInterpolant, refs: list, flat_index: int) -> Facet:
    d, n = p.dim, p.resolution
    perms = kuhn_permutations(d)
    cells = cell_indices(d, n)
    for ref in refs:
        kind = ref[0]
        size = cells.shape[0] if kind == "diff" else ref[4].size
        if flat_index >= size:
            flat_index -= size
            continue
        if kind == "diff":
            _, i, q, u, v = ref
            c = cells[flat_index]
            a = tuple(1 if r == u else (-1 if r == v else 0) for r in range(d))
            plane = Hyperplane(a, int(c[u] - c[v]), n)
            return Facet(plane, tuple(c), perms[q], tuple(c), perms[i])
        _, i, q, axis, inner = ref
        c = cells[inner[flat_index]]
        c_nbr = c.copy()
        c_nbr[axis] += 1
        a = tuple(1 if r == axis else 0 for r in range(d))
        plane = Hyperplane(a, int(c[axis] + 1), n)
        return Facet(plane, tuple(c), perms[i], tuple(c_nbr), perms[q])
    raise IndexError(flat_index)


def convexity_check(p: SimplicialInterpolant, tol: float = JUMP_TOL) -> ConvexityVerdict:
    """Convex iff the slope never drops by more than ``tol`` across a facet."""
    jumps, refs = facet_jumps(p)
    if jumps.size == 0:
        return ConvexityVerdict(True, math.inf, None, jumps)
    worst = int(np.argmin(jumps))
    min_jump = float(jumps[worst])
    if min_jump >= -tol:
        return ConvexityVerdict(True, min_jump, None, jumps)
    return ConvexityVerdict(False, min_jump, _witness(p, refs, worst), jumps)


def hinge_values(d: int, n: int, planes: list[Hyperplane] | None = None) -> np.ndarray:
    """``sum |<a, v> - b|`` over the crease set at every lattice vertex v.

    Evaluated in integer arithmetic on lattice indices, then scaled by 1/n.
    """
    if planes is None:
        planes = crease_set(d, n)
    idx = lattice_indices(d, n)
    total = np.zeros(idx.shape[0], dtype=np.int64)
    for plane in planes:
        total += np.abs(idx @ np.array(plane.a, dtype=np.int64) - plane.offset)
    return total / n


@dataclass(frozen=True, eq=False)
class Decomposition:
    dc: DCFn
    lam: float
    lam0: float
    doublings: int
    shift: float
    g_interp: SimplicialInterpolant
    h_interp: SimplicialInterpolant

    @property
    def n_g(self) -> int:
        return self.dc.g.n_pieces

    @property
    def n_h(self) -> int:
        return self.dc.h.n_pieces


def decompose_detailed(
    p: SimplicialInterpolant, piece_budget: int = DEFAULT_PIECE_BUDGET
) -> Decomposition:
    d, n = p.dim, p.resolution
    n_simplices = math.factorial(d) * n**d
    if n_simplices > piece_budget:
        raise BudgetError(
            f"{n_simplices} simplices (up to that many pieces per part) exceed the "
            f"piece budget {piece_budget}"
        )
    base = convexity_check(p)
    hinge = hinge_values(d, n).reshape(p.vertex_values.shape)
    if base.convex:
        lam = lam0 = 0.0
        doublings = 0
        h_vals = np.zeros_like(p.vertex_values)
    else:
        lam0 = -base.min_jump / 2.0
        lam = lam0
        doublings = 0
        while not convexity_check(p.with_values(p.vertex_values + lam * hinge)).convex:
            doublings += 1
            if doublings > MAX_DOUBLINGS:  # pragma: no cover - slopes are finite
                raise RuntimeError("hinge weight search did not terminate")
            lam *= 2.0
        h_vals = lam * hinge
    log.info("hinge weight: closed form %.6g, accepted %.6g after %d doublings", lam0, lam, doublings)

    g_vals = p.vertex_values + h_vals
    # both parts are affine on simplices, so their cube minima sit at lattice vertices
    shift = max(0.0, -float(g_vals.min()), -float(h_vals.min()))
    g_interp = p.with_values(g_vals + shift)
    h_interp = p.with_values(h_vals + shift)
    if lam == 0.0 and shift == 0.0:
        h = MaxAffineFn.zero(d)
    else:
        h = dedup_pieces(simplex_pieces(h_interp), decimals=12)
    g = dedup_pieces(simplex_pieces(g_interp), decimals=12)
    return Decomposition(DCFn(g, h), lam, lam0, doublings, shift, g_interp, h_interp)


def decompose(p: SimplicialInterpolant, piece_budget: int = DEFAULT_PIECE_BUDGET) -> DCFn:
    """Split ``p`` into ``g - h`` with g, h convex, max-affine and >= 0 on the cube."""
    return decompose_detailed(p, piece_budget).dc
