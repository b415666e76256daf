import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwkb.core import ModeField, ProblemData, SolutionPair, build_channel_grids, make_geometry
from bwkb.errors import InputError
from bwkb.manufactured import random_data
from bwkb.verification import (
    CSV_COLUMNS,
    ENERGY_COLUMNS,
    compute_norms,
    defect_scaling,
    difference,
    divergence_defect,
    energy_check,
    energy_to_csv,
    energy_uniform,
    fit_slope,
    parseval_weights,
    remainder_study,
    reports_to_csv,
    to_json,
)


@pytest.fixture(scope="module")
def grids(geo):
    return build_channel_grids(geo, 24)


def _empty(geo, grids, M=3):
    ks = geo.wavenumbers(M)
    return SolutionPair(grids, geo, [ModeField.zeros(m, ks[m], grids) for m in range(M + 1)])


def test_zero_norms(geo, grids):
    ns = compute_norms(_empty(geo, grids))
    assert all(v == 0 for d in (ns.l2, ns.grad, ns.pressure) for v in d.values())
    assert ns.jump == ns.jump_n == ns.avg_n == 0


def test_constant_field(geo, grids):
    sol = _empty(geo, grids)
    sol.modes[0].u["porous"][:] = 1.5
    ns = compute_norms(sol)
    assert ns.l2["porous"] == pytest.approx(1.5**2 * geo.L * geo.b, rel=1e-13)
    assert ns.grad["porous"] == pytest.approx(0.0, abs=1e-20)


_GRIDS = {}


@given(st.integers(1, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_parseval_single_mode(m, re, im):
    geo = make_geometry(2 * np.pi, 1, 1, 1)
    grids = _GRIDS.setdefault("g", build_channel_grids(geo, 12))
    sol = _empty(geo, grids)
    sol.modes[m].p["top"][:] = re + 1j * im
    # real field 2|c| cos(kx + phase): integral of the square over the strip is 2 L |c|^2 a
    assert compute_norms(sol).pressure["top"] == pytest.approx(2 * geo.L * (re**2 + im**2) * geo.a, rel=1e-12, abs=1e-14)


def test_parseval_against_tensor_quadrature(geo, grids):
    rng = np.random.default_rng(0)
    sol = _empty(geo, grids, M=2)
    y = grids.porous.nodes
    for mf in sol.modes:
        c = rng.normal(size=3) + 1j * rng.normal(size=3)
        if mf.m == 0:
            c = c.real
        mf.v["porous"][:] = c[0] + c[1] * y + c[2] * y**2
    nx = 64
    x = np.arange(nx) * geo.L / nx
    vals = np.array([[sol.evaluate(xi, yi)[0][1] for yi in y] for xi in x])
    ref = sum(float(grids.porous.integrate(row**2)) for row in vals) * geo.L / nx
    assert compute_norms(sol).l2["porous"] == pytest.approx(ref, rel=1e-11)


def test_parseval_weights():
    w = parseval_weights(3, 2.0)
    assert list(w) == [2.0, 4.0, 4.0, 4.0]


def test_grid_mismatch(geo, grids):
    sol = _empty(geo, grids)
    with pytest.raises(InputError):
        compute_norms(sol, make_geometry(2 * np.pi, 1, 2, 1))


def test_difference_self_is_zero(geo, prm):
    from bwkb.solvers import FullProblemSpec, solve_full

    g = build_channel_grids(geo, 20, eps=0.1)
    sol = solve_full(FullProblemSpec(geo, prm.with_eps(0.1), random_data(geo, 2, seed=1)), g)
    assert compute_norms(difference(sol, sol)).l2["porous"] == 0


def test_fit_slope_exact():
    eps = np.array([1e-1, 1e-2, 1e-3])
    assert fit_slope(eps, 3 * eps**1.7) == pytest.approx(1.7, abs=1e-12)


def test_energy_zero_data(geo, prm):
    reps = energy_check(ProblemData.zero(geo, 2), geo, prm, [0.1, 0.01], n_points=16)
    assert all(r.ratio is None and r.lhs == 0 for r in reps)
    assert energy_uniform(reps) == (True, None)


def test_energy_csv(geo, prm):
    reps = energy_check(random_data(geo, 2, seed=3), geo, prm, [0.1, 0.01], n_points=20)
    rows = list(csv.reader(io.StringIO(energy_to_csv(reps))))
    assert tuple(rows[0]) == ENERGY_COLUMNS and len(rows) == 3
    assert json.loads(to_json(reps))[0]["lhs"] == pytest.approx(reps[0].lhs)


@pytest.mark.parametrize("bad", [[], [0.01, 0.1], [0.1, -0.01]])
def test_eps_list_rejected(geo, prm, bad):
    with pytest.raises(InputError):
        energy_check(ProblemData.zero(geo, 1), geo, prm, bad, n_points=16)


def test_remainder_csv_columns(geo, prm, small_bundle):
    reps = remainder_study(small_bundle.data, geo, prm, [2], [0.1, 0.05, 0.02, 0.01], n_points=24,
                           bundle=small_bundle)
    rows = list(csv.reader(io.StringIO(reports_to_csv(reps))))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 5
    assert np.isfinite(reps[0].fitted_slope)
    assert reps[0].theory_slope == 0.0


def test_remainder_order_check(geo, prm, small_bundle):
    with pytest.raises(InputError):
        remainder_study(small_bundle.data, geo, prm, [1], [0.1, 0.01], bundle=small_bundle)
    with pytest.raises(InputError):
        remainder_study(small_bundle.data, geo, prm, [5], [0.1, 0.01], bundle=small_bundle)


def test_divergence_defect_paths_agree(small_bundle):
    d = divergence_defect(small_bundle, 2, 1e-3, n_points=24)
    assert d.closed_form > 0
    assert d.rel_diff <= 1e-8


def test_defect_scaling_shape(small_bundle):
    defects, slope, pred = defect_scaling(small_bundle, 2, [1e-3, 1e-4], n_points=24)
    assert len(defects) == 2 and pred == 1.25 and np.isfinite(slope)
