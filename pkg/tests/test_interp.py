import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import PROPERTY, cube_points
from narrownet.errors import BudgetError, DimensionError, ParseError, ValidationError
from narrownet.interp import (
    SimplicialInterpolant,
    TargetFn,
    build_interpolant,
    dump_vertex_values,
    eval_interpolant,
    grid_resolution,
    kuhn_permutations,
    lattice_points,
    load_vertex_values,
    sample_interpolant,
    simplex_pieces,
    simplex_vertices,
)


def _fn(d, f, lip):
    return TargetFn(d, f, lipschitz=lip)


def _simplex_oracle(p, x):
    """Locate x by brute force over all simplices and solve for its barycentric weights."""
    d, n = p.dim, p.resolution
    for cell in itertools.product(range(n), repeat=d):
        if np.any(x < np.array(cell) / n - 1e-12) or np.any(x > (np.array(cell) + 1) / n + 1e-12):
            continue
        for perm in kuhn_permutations(d):
            verts = simplex_vertices(d, n, np.array(cell), perm)
            m = np.vstack([verts.T, np.ones(d + 1)])
            lam = np.linalg.solve(m, np.append(x, 1.0))
            if lam.min() >= -1e-12:
                vals = p.vertex_values[tuple(np.rint(verts * n).astype(int).T)]
                return float(lam @ vals)
    raise AssertionError("point not located")


def test_affine_reproduced_exactly():
    f = _fn(3, lambda xs: xs @ [0.3, -1.0, 2.0] + 0.5, math.sqrt(0.09 + 1 + 4))
    p = build_interpolant(f, 0.5)
    xs = cube_points(np.random.default_rng(0), 3)
    assert np.max(np.abs(p.evaluate(xs) - f.evaluate(xs))) <= 1e-12


def test_parabola_grid_and_error():
    f = _fn(1, lambda xs: xs[:, 0] ** 2, 2.0)
    p = build_interpolant(f, 0.25)
    assert p.resolution == 8
    xs = np.linspace(0, 1, 100_001)[:, None]
    err = np.max(np.abs(p.evaluate(xs) - f.evaluate(xs)))
    # piecewise-linear interpolation of x^2 with spacing h has error h^2/4
    assert err == pytest.approx(1 / 256, abs=1e-9)
    assert err <= 0.25


def test_abs_diff_reproduced_exactly():
    # the kink x1 = x2 lies on Kuhn facets, so the interpolant is exact
    f = _fn(2, lambda xs: np.abs(xs[:, 0] - xs[:, 1]), math.sqrt(2))
    p = sample_interpolant(f, 5)
    xs = cube_points(np.random.default_rng(1), 2)
    assert np.max(np.abs(p.evaluate(xs) - f.evaluate(xs))) <= 1e-12


def test_vertices_interpolated():
    rng = np.random.default_rng(2)
    p = SimplicialInterpolant(2, 4, rng.normal(size=25))
    np.testing.assert_allclose(p.evaluate(lattice_points(2, 4)), p.vertex_values.ravel(), atol=1e-14)


def test_one_dimensional_value():
    p = SimplicialInterpolant(1, 2, [0.0, 0.25, 1.0])
    assert p([0.25]) == 0.125


def test_matches_linear_solve_oracle_d2():
    rng = np.random.default_rng(3)
    p = SimplicialInterpolant(2, 3, rng.normal(size=16))
    for x in rng.random((200, 2)):
        assert p(x) == pytest.approx(_simplex_oracle(p, x), abs=1e-12)


def test_matches_linear_solve_oracle_d3():
    rng = np.random.default_rng(4)
    p = SimplicialInterpolant(3, 2, rng.normal(size=27))
    for x in rng.random((100, 3)):
        assert p(x) == pytest.approx(_simplex_oracle(p, x), abs=1e-12)


def test_grid_resolution_formula():
    assert grid_resolution(2.0, 1, 0.25) == 8
    assert grid_resolution(math.pi / 2, 2, 0.1) == math.ceil(math.pi / 2 * math.sqrt(2) / 0.1)
    assert grid_resolution(1e-9, 3, 1.0) == 1


def test_simplex_pieces_max_equals_convex_interpolant():
    f = _fn(2, lambda xs: (xs**2).sum(axis=1), 2 * math.sqrt(2))
    p = sample_interpolant(f, 1)  # one cell: a convex interpolant
    q = simplex_pieces(p)
    assert q.n_pieces == 2
    xs = cube_points(np.random.default_rng(0), 2, 1000)
    np.testing.assert_allclose(q.evaluate(xs), p.evaluate(xs), atol=1e-12)


def test_out_of_cube_clamped_with_warning(caplog):
    p = SimplicialInterpolant(1, 2, [0.0, 0.25, 1.0])
    assert p([1.5]) == 1.0
    assert "clamped" in caplog.text


def test_errors():
    f = _fn(2, lambda xs: xs[:, 0], 1.0)
    with pytest.raises(ValidationError):
        build_interpolant(f, 0.0)
    with pytest.raises(ValidationError):
        build_interpolant(TargetFn(2, lambda xs: xs[:, 0]), 0.1)
    with pytest.raises(BudgetError):
        build_interpolant(f, 1e-4, budget=1000)
    with pytest.raises(DimensionError):
        eval_interpolant(SimplicialInterpolant(2, 1, np.zeros(4)), [0.5])
    with pytest.raises(ValidationError):
        SimplicialInterpolant(2, 2, np.zeros(8))


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("NARROWNET_BUDGET", "10")
    with pytest.raises(BudgetError):
        sample_interpolant(_fn(2, lambda xs: xs[:, 0], 1.0), 3)


def test_vertex_file_roundtrip():
    p = SimplicialInterpolant(2, 3, np.random.default_rng(5).normal(size=16))
    back = load_vertex_values(dump_vertex_values(p))
    assert (back.dim, back.resolution) == (2, 3)
    np.testing.assert_array_equal(back.vertex_values, p.vertex_values)


@pytest.mark.parametrize(
    "text, field",
    [("", "header"), ("2 x", "header"), ("1 2\n0 1", "values"), ("1 1\n0 nope", "values"), ("1 1\n0 inf", "values")],
)
def test_vertex_file_errors(text, field):
    with pytest.raises(ParseError) as exc:
        load_vertex_values(text)
    assert exc.value.field == field


def _lipschitz_target(rng, d):
    """sum_i c_i sin(w_i . x); Euclidean Lipschitz constant <= sum |c_i| |w_i|."""
    w = rng.normal(size=(3, d)) * 3
    c = rng.normal(size=3)
    lip = float(np.sum(np.abs(c) * np.linalg.norm(w, axis=1)))
    return TargetFn(d, lambda xs: np.sin(xs @ w.T) @ c, lipschitz=lip)


@pytest.mark.property
@PROPERTY
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3), n=st.integers(1, 6))
def test_error_within_lipschitz_bound(seed, d, n):
    rng = np.random.default_rng(seed)
    f = _lipschitz_target(rng, d)
    p = sample_interpolant(f, n)
    xs = cube_points(rng, d, 2000)
    assert np.max(np.abs(p.evaluate(xs) - f.evaluate(xs))) <= f.lipschitz * math.sqrt(d) / n + 1e-12


@pytest.mark.property
@PROPERTY
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4), n=st.integers(1, 4))
def test_affine_on_each_simplex(seed, d, n):
    rng = np.random.default_rng(seed)
    p = SimplicialInterpolant(d, n, rng.normal(size=(n + 1) ** d))
    cell = rng.integers(0, n, d)
    perm = tuple(rng.permutation(d))
    verts = simplex_vertices(d, n, cell, perm)
    vals = p.vertex_values[tuple(np.rint(verts * n).astype(int).T)]
    lam = rng.dirichlet(np.ones(d + 1), size=50)
    np.testing.assert_allclose(p.evaluate(lam @ verts), lam @ vals, rtol=0, atol=1e-12)


@pytest.mark.property
@PROPERTY
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3), n=st.integers(1, 5))
def test_continuous_across_facets(seed, d, n):
    rng = np.random.default_rng(seed)
    p = SimplicialInterpolant(d, n, rng.uniform(-1, 1, (n + 1) ** d))
    # each simplex gradient has entries bounded by 2n, so norm <= 2n sqrt(d)
    lip = 2 * n * math.sqrt(d)
    xs = cube_points(rng, d, 500)
    ys = np.clip(xs + rng.normal(size=xs.shape) * 1e-3, 0, 1)
    gap = np.abs(p.evaluate(xs) - p.evaluate(ys))
    assert np.all(gap <= lip * np.linalg.norm(xs - ys, axis=1) + 1e-12)
