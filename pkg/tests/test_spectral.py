import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwkb.errors import ConfigurationError, SingularSystemError
from bwkb.spectral import DenseSystem, build_grid, composite_grid, solve_dense


def test_derivative_of_square():
    g = build_grid((0.0, 1.0), 16)
    assert np.max(np.abs(g.D1 @ g.nodes**2 - 2 * g.nodes)) < 1e-12


def test_quadrature_of_one():
    g = build_grid((-1.0, 0.0), 16)
    assert abs(g.integrate(np.ones(16)) - 1.0) < 1e-14


def test_derivative_of_exp():
    g = build_grid((0.0, 1.0), 24)
    assert np.max(np.abs(g.D1 @ np.exp(g.nodes) - np.exp(g.nodes))) <= 1e-10


@pytest.mark.parametrize("m", range(6))
def test_monomial_derivatives(m):
    g = build_grid((-0.3, 1.7), 12)
    y = g.nodes
    d = m * y ** (m - 1) if m else np.zeros_like(y)
    assert np.max(np.abs(g.D1 @ y**m - d)) < 1e-10


@pytest.mark.parametrize("n", [9, 12, 17])
def test_quadrature_exactness(n):
    g = build_grid((0.5, 2.0), n)
    for deg in range(n):
        exact = (2.0 ** (deg + 1) - 0.5 ** (deg + 1)) / (deg + 1)
        assert abs(g.integrate(g.nodes**deg) - exact) <= 1e-12 * abs(exact)


def test_weights_positive():
    for n in (8, 13, 32, 49):
        assert np.all(build_grid((0, 1), n).weights > 0)


def test_too_few_nodes():
    with pytest.raises(ConfigurationError):
        build_grid((0, 1), 7)
    with pytest.raises(ConfigurationError):
        build_grid((1, 1), 12)


def test_spectral_decay_exp():
    # error ratio N -> 2N for an analytic function; 12 -> 24 already hits rounding,
    # so the ratio is measured one step earlier
    errs = []
    for n in (8, 16):
        g = build_grid((0.0, 1.0), n)
        errs.append(np.max(np.abs(g.D1 @ np.exp(g.nodes) - np.exp(g.nodes))))
    assert errs[0] / errs[1] > 1e3


def test_composite_cumulative_integral():
    cg = composite_grid([0.0, 0.3, 1.0, 2.0], 14)
    y = cg.nodes
    F = cg.cumulative_integral(np.cos(y))
    assert np.max(np.abs(F - np.sin(y))) < 1e-13


def test_composite_interpolation():
    g = build_grid((0.0, 2.0), 20)
    yq = np.linspace(0, 2, 37)
    assert np.max(np.abs(g.interpolate(np.sin(g.nodes), yq) - np.sin(yq))) < 1e-12


def test_tail_ratio_resolved_vs_not():
    cg = composite_grid([0.0, 1.0], 24)
    assert cg.tail_ratio(np.exp(cg.nodes)) < 1e-12
    assert cg.tail_ratio(np.exp(-200 * cg.nodes)) > 1e-6


def test_solve_identity_and_diag():
    b = np.array([3.0, -1.0, 2.0])
    assert np.allclose(solve_dense(DenseSystem(np.eye(3), b)), b)
    x = solve_dense(DenseSystem(np.array([[2.0, 0], [0, 4.0]]), np.array([2.0, 8.0])))
    assert np.allclose(x, [1.0, 2.0], atol=1e-15)


def test_solve_random_residual():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(50, 50)) + 50 * np.eye(50)
    b = rng.normal(size=50)
    s = DenseSystem(A, b)
    x = solve_dense(s)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * (np.linalg.norm(A, 2) * np.linalg.norm(x) + np.linalg.norm(b))
    assert s.condition is not None and np.isfinite(s.condition)


def test_singular_reports_pivot():
    A = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]])
    with pytest.raises(SingularSystemError) as err:
        solve_dense(DenseSystem(A, np.ones(3)))
    assert err.value.pivot_index >= 0


@given(st.integers(min_value=8, max_value=40), st.floats(min_value=-3, max_value=3),
       st.floats(min_value=0.1, max_value=5))
def test_derivative_kills_constants(n, lo, width):
    g = build_grid((lo, lo + width), n)
    assert np.max(np.abs(g.D1 @ np.ones(n))) < 1e-9 * n**2 / width
    assert abs(g.integrate(np.ones(n)) - width) < 1e-12 * max(1, width)
