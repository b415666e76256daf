import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from bwkb.core import (
    PhysicalParams,
    ProblemData,
    SympyProfile,
    VolumeField,
    Y,
    build_channel_grids,
    darcy_laplacian,
    evaluate_field,
    interface_zeros,
    make_geometry,
    porous_breaks,
    resample,
)
from bwkb.errors import ConfigurationError, DomainError
from bwkb.manufactured import Manufactured


def test_geometry_layout(geo):
    assert geo.interfaces == (0.0, -1.0)
    assert geo.walls == (1.0, -2.0)
    assert np.allclose(geo.normal(0), [0, 1]) and np.allclose(geo.normal(1), [0, -1])


def test_distance_examples(geo):
    assert geo.distance(-0.25) == pytest.approx(0.25)
    assert geo.distance(-0.75) == pytest.approx(0.25)
    assert geo.lap_d(-0.4) == 0.0


@pytest.mark.parametrize("bad", [(0, 1, 1, 1), (1, -1, 1, 1), (1, 1, 0, 1), (1, 1, 1, np.nan)])
def test_geometry_rejects_nonpositive(bad):
    with pytest.raises(ConfigurationError):
        make_geometry(*bad)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        PhysicalParams(1.0, 1.0, 0.0, 1.0)
    p = PhysicalParams(1.0, 1.0, 2.0, 3.0, 0.5)
    n = np.array([0.0, 1.0])
    xi = np.array([1.0, 2.0])
    assert np.allclose(p.M(xi, n), [0.0, 6.0])
    assert np.allclose(p.S(xi, n), [2.0, 4.0])


def test_subdomain_and_outside(geo):
    assert geo.subdomain_of(0.5) == "top"
    assert geo.subdomain_of(-0.5) == "porous"
    assert geo.subdomain_of(-1.5) == "bottom"
    with pytest.raises(DomainError):
        geo.subdomain_of(1.5)
    with pytest.raises(DomainError):
        evaluate_field(VolumeField.zero(geo.L, 2), (0.0, -3.0), geo)


@given(st.floats(min_value=-1.0, max_value=0.0).filter(lambda y: abs(y + 0.5) > 1e-9 and -1 < y < 0))
def test_gradient_of_distance(y):
    geo = make_geometry(2 * np.pi, 1, 1, 1)
    g = geo.grad_d(y)
    assert np.isclose(np.hypot(*g), 1.0)
    assert geo.distance(y) > 0
    comp = int(geo.nearest_component(y))
    assert np.allclose(g, -geo.normal(comp))


def test_constant_mode_field(geo):
    f = VolumeField(geo.L, (SympyProfile([sp.Integer(3), sp.Integer(-1)]),))
    assert np.allclose(evaluate_field(f, (1.234, 0.4), geo), [3.0, -1.0])


def test_cosine_from_conjugate_pair(geo):
    h = interface_zeros(1)
    h[0, 0, 1] = 0.5
    for x in np.linspace(0, 6, 7):
        assert evaluate_field(h, (x, 0), geo)[0] == pytest.approx(np.cos(x), abs=1e-15)


def test_random_five_mode_field_vs_direct_sum(geo):
    rng = np.random.default_rng(4)
    c = rng.normal(size=(2, 6)) + 1j * rng.normal(size=(2, 6))
    c[:, 0] = c[:, 0].real
    profs = tuple(SympyProfile([sp.Float(c[0, m].real) + sp.I * sp.Float(c[0, m].imag),
                                (sp.Float(c[1, m].real) + sp.I * sp.Float(c[1, m].imag)) * (1 + Y)]) for m in range(6))
    f = VolumeField(geo.L, profs)
    for x, y in rng.uniform([0, -1], [geo.L, 1], size=(20, 2)):
        direct = np.zeros(2)
        for m in range(6):
            fm = np.array([c[0, m], c[1, m] * (1 + y)])
            if m == 0:
                direct += fm.real
            else:
                direct += 2 * (fm.real * np.cos(m * x) - fm.imag * np.sin(m * x))
        val = evaluate_field(f, (x, y), geo)
        assert np.max(np.abs(val - direct)) < 1e-13
        assert np.max(np.abs(np.imag(val))) <= 1e-12 * max(1.0, np.max(np.abs(val)))


def test_problem_data_validation(geo):
    z = VolumeField.zero(geo.L, 2)
    bad = interface_zeros(2)
    bad[0, 0, 0] = 1j
    with pytest.raises(ConfigurationError):
        ProblemData(geo, z, z, bad, interface_zeros(2))
    with pytest.raises(ConfigurationError):
        ProblemData(geo, z, z, interface_zeros(3), interface_zeros(2))
    assert ProblemData.zero(geo, 2).is_zero()


def test_sympy_profile_derivatives():
    p = SympyProfile([sp.sin(Y), Y**3])
    y = np.linspace(-1, 1, 5)
    assert np.allclose(p.deriv(2)(y), [-np.sin(y), 6 * y])
    assert p.deriv(1) is p.deriv(1)


def test_darcy_laplacian_against_direct_formula():
    k, kap = 2.0, 3.0
    gx, gy = sp.sin(Y) * Y, sp.exp(Y / 3)
    prof = darcy_laplacian(SympyProfile([gx, gy]), k, kap)
    # Lap v - grad div of g / kappa with d/dx -> ik
    lap = lambda f: sp.diff(f, Y, 2) - k**2 * f
    div = sp.I * k * gx + sp.diff(gy, Y)
    ex = (lap(gx) - sp.I * k * div) / kap
    ey = (lap(gy) - sp.diff(div, Y)) / kap
    y = np.linspace(-1, 0, 7)
    ref = np.array([[complex(ex.subs(Y, t)) for t in y], [complex(ey.subs(Y, t)) for t in y]])
    assert np.allclose(prof(y), ref, atol=1e-13)


def test_porous_breaks_contain_cutoff_transition(geo):
    br = porous_breaks(geo, eps=1e-5, kappa=1.0)
    for d in (0.25, 0.375):
        assert np.isclose(br, -d).any() and np.isclose(br, -1 + d).any()
    assert min(np.diff(br)) > 0
    assert len(br) > len(porous_breaks(geo))


def test_resample_is_exact_on_refined_breaks(geo, prm):
    man = Manufactured(geo, prm, 2, seed=0)
    coarse = build_channel_grids(geo, 20)
    fine = build_channel_grids(geo, 20, eps=1e-3)
    a = resample(man.exact_solution(coarse), fine)
    b = man.exact_solution(fine)
    for ma, mb in zip(a.modes, b.modes):
        for q in ("u", "v", "p"):
            assert np.max(np.abs(getattr(ma, q)["porous"] - getattr(mb, q)["porous"])) < 1e-9
