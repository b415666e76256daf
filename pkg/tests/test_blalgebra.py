import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from bwkb.blalgebra import (
    BLProfile,
    bl_dz,
    bl_ode_solve,
    bl_tail_integral,
    cf_evaluate,
    cf_lap,
    ode_matrix,
    slow_div,
    tail_matrix,
)
from bwkb.cutoff import Cutoff

S1 = 1.0


def prof(s, coeffs):
    """Scalar profile with one mode and no cutoff derivatives: coeffs[l] multiplies z^l."""
    return BLProfile(s, np.asarray(coeffs, dtype=complex).reshape(-1, 1, 1))


def values(p, z):
    chi = np.ones((max(p.R, 1), np.size(z)))
    out = p.values(np.atleast_1d(z), chi)[0]
    return out if np.ndim(z) else out[0]


def coeffs(p):
    return p.coeffs[:, 0, 0]


# -- dz -----------------------------------------------------------------------------


def test_dz_examples():
    s = np.sqrt(2.0)
    assert np.allclose(coeffs(bl_dz(prof(s, [1]))), [-s])
    assert np.allclose(coeffs(bl_dz(prof(s, [0, 1]))), [1, -s])


def test_dz_finite_difference():
    rng = np.random.default_rng(1)
    p = prof(1.3, rng.normal(size=5))
    z, h = 0.7, 1e-5
    fd = (values(p, z + h) - values(p, z - h)) / (2 * h)
    assert abs(values(bl_dz(p), z) - fd) < 1e-8


# -- tail integral ---------------------------------------------------------------------


def test_tail_integral_closed_forms():
    for kap in (0.5, 1.0, 3.0):
        s = np.sqrt(kap)
        assert np.allclose(coeffs(bl_tail_integral(prof(s, [1]))), [kap**-0.5])
        assert np.allclose(coeffs(bl_tail_integral(prof(s, [0, 1]))), [1 / kap, kap**-0.5])


@pytest.mark.parametrize("kap", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("l", range(6))
def test_tail_integral_vs_quadrature(kap, l):
    s = np.sqrt(kap)
    c = np.zeros(l + 1)
    c[l] = 1.0
    q = bl_tail_integral(prof(s, c))
    for z in (0.0, 0.5, 2.0):
        ref, _ = quad(lambda t: t**l * np.exp(-s * t), z, np.inf, epsabs=1e-14, epsrel=1e-13)
        assert abs(values(q, z) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_tail_integral_random_degree3():
    rng = np.random.default_rng(2)
    s = np.sqrt(2.0)
    p = prof(s, rng.normal(size=4))
    q = bl_tail_integral(p)
    for z in (0.0, 0.5, 2.0):
        ref, _ = quad(lambda t: values(p, t).real, z, np.inf, epsabs=1e-14, epsrel=1e-13)
        assert abs(values(q, z) - ref) < 1e-10


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=7), st.floats(0.2, 4.0))
def test_tail_integral_inverts_dz(c, s):
    p = prof(s, c)
    back = bl_dz(bl_tail_integral(p))
    assert np.max(np.abs(coeffs(back) + coeffs(p))) <= 1e-12 * max(1.0, np.max(np.abs(c)) * s**-len(c))


def test_tail_matrix_entries():
    T = tail_matrix(2.0, 2)
    assert T[0, 2] == pytest.approx(2 / 8)
    assert T[2, 2] == pytest.approx(0.5)


# -- ODE solve --------------------------------------------------------------------------


def test_ode_solve_degree0():
    s = np.sqrt(3.0)
    f = bl_ode_solve(prof(s, [2.0]), np.array([[0.5]]))
    assert np.allclose(coeffs(f), [0.5, 2.0 / (2 * s)])


def test_ode_solve_homogeneous():
    s = 1.7
    f = bl_ode_solve(BLProfile.zero(s, 0), np.array([[1.25]]))
    assert np.allclose(coeffs(f), [1.25])


def _ode_residual(f, s):
    return bl_dz(bl_dz(f)).scale(-1.0) + f.scale(s * s)


@pytest.mark.parametrize("K", range(5))
def test_ode_solve_symbolic_residual(K):
    rng = np.random.default_rng(K)
    s = np.sqrt(3.0)
    gam = rng.normal(size=K + 1)
    f = bl_ode_solve(prof(s, gam), np.array([[rng.normal()]]))
    assert f.degree == K + 1
    res = coeffs(_ode_residual(f, s))
    assert np.max(np.abs(res[: K + 1] - gam)) <= 1e-12 * max(1, np.max(np.abs(gam)))
    assert np.max(np.abs(res[K + 1:])) <= 1e-12 * max(1, np.max(np.abs(gam)))
    # index convention of the bidiagonal matrix: gamma = M_K beta
    beta = coeffs(f)[1:]
    assert np.allclose(ode_matrix(s, K) @ beta, gam, atol=1e-12)


def test_ode_matrix_nonsingular():
    for K in range(6):
        M = ode_matrix(1.0, K)
        assert np.all(np.diag(M) > 0)
        assert M.shape == (K + 1, K + 1)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), st.floats(-2, 2), st.floats(0.3, 3))
def test_ode_solve_properties(gam, f0, s):
    f = bl_ode_solve(prof(s, gam), np.array([[f0]]))
    assert coeffs(f)[0] == f0
    res = coeffs(_ode_residual(f, s))
    scale = max(1.0, np.max(np.abs(gam)))
    assert np.max(np.abs(res[: len(gam)] - gam)) <= 1e-12 * scale * 10 ** len(gam) / min(s, 1) ** len(gam)
    # decay bound by the absolute coefficients
    z = np.linspace(0, 10, 21)
    bound = np.abs(coeffs(f))[None, :] * (z[:, None] ** np.arange(f.degree + 1)) * np.exp(-s * z)[:, None]
    # equality when all coefficients share a sign, so allow rounding relative to the bound
    bound = bound.sum(axis=1)
    assert np.all(np.abs(values(f, z)) <= bound * (1 + 1e-12) + 1e-14)


# -- coefficient fields and geometry hooks -----------------------------------------------


def test_structural_zero_propagates():
    z = BLProfile.zero(1.0, 3)
    assert z.is_structural_zero()
    assert bl_dz(z).is_structural_zero() and bl_tail_integral(z).is_structural_zero()
    assert slow_div(z, z, np.arange(4.0)).is_structural_zero()


def test_laplacian_with_synthetic_curvature():
    # A(x, d) = sum_r a_r chi^(r)(d) e^{ikx}; Lap = d_xx + d_dd + (Lap d) d_d when |grad d| = 1
    cut = Cutoff(1.0)
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 1)) + 0j
    k, c = np.array([2.0]), 0.7
    d = np.linspace(0.26, 0.37, 9)
    h = 1e-4

    def A(dd):
        return cf_evaluate(a, cut.table(dd, 3))[0]

    ref = -(k[0] ** 2) * A(d) + (A(d + h) - 2 * A(d) + A(d - h)) / h**2 + c * (A(d + h) - A(d - h)) / (2 * h)
    got = cf_evaluate(cf_lap(a, k, c), cut.table(d, 6))[0]
    assert np.max(np.abs(got - ref)) < 1e-4 * np.max(np.abs(ref))


def test_slow_div_curvature_term():
    s, k = 1.0, np.array([0.0, 1.0])
    N = BLProfile(s, np.ones((1, 1, 2), dtype=complex))
    T = BLProfile.zero(s, 1)
    flat = slow_div(T, N, k, 0.0)
    curved = slow_div(T, N, k, 2.0)
    diff = curved - flat
    assert np.allclose(diff.coeffs[:, 0], -2.0)


# -- cutoff ----------------------------------------------------------------------------


def test_cutoff_plateaus():
    cut = Cutoff(2.0)
    assert np.all(cut(np.linspace(0, 0.5, 11)) == 1.0)
    assert np.all(cut(np.linspace(0.75, 2, 11)) == 0.0)
    for r in range(1, 8):
        assert np.all(cut(np.array([0.0, 0.3, 0.8, 1.5]), r) == 0.0)


@pytest.mark.parametrize("r", [1, 3, 6, 10])
def test_cutoff_derivatives_finite_difference(r):
    cut = Cutoff(1.0)
    d = np.linspace(0.27, 0.36, 7)
    h = 1e-6
    fd = (cut(d + h, r - 1) - cut(d - h, r - 1)) / (2 * h)
    assert np.max(np.abs(cut(d, r) - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))


@given(st.floats(0.0, 1.0))
def test_cutoff_monotone_and_bounded(t):
    cut = Cutoff(1.0)
    d = 0.25 + 0.125 * t
    v = cut(np.array([d]))[0]
    assert 0.0 <= v <= 1.0
    assert cut(np.array([d]), 1)[0] <= 0.0
