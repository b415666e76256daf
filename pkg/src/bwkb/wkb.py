"""Order-by-order construction of the two-scale expansion.

Porous velocity ~ sum_j eps^{j/2} (vbar_j(x) + vt_j(x, d/sqrt(eps))), fluid velocity
~ sum_j eps^{j/2} v+_j(x), pressures alike.  Each interface component carries its own
layer family, written in the (t, n) frame: vt_j = T_j t + N_j n, pt_j = Q_j.

With s = sqrt(kappa) and shift = (grad d . grad) on coefficient fields:

    N_j = -tail(div T_{j-1}, N_{j-1})                         (divergence, fast part)
    Q_j = -tail(-N''_{j-1} + kappa N_{j-1} - shift Q_{j-1}
                - 2 shift N'_{j-2} - Lap(d) N'_{j-2} - Lap N_{j-3})  (normal momentum)
    -T''_j + kappa T_j = -dx Q_j + 2 shift T'_{j-1} + Lap(d) T'_{j-1} + Lap T_{j-2}

where ' is d/dz, and (vbar_j, v+_j) solve the Darcy-Stokes problem with data collected
from lower orders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .blalgebra import (
    BLProfile,
    bl_dz,
    bl_ode_solve,
    bl_tail_integral,
    cf_extend,
    cf_trace,
    profile_dx,
    profile_lap,
    profile_shift,
    slow_div,
)
from .core import (
    ChannelGrids,
    ModeField,
    PhysicalParams,
    ProblemData,
    SlabGeometry,
    SolutionPair,
    SympyProfile,
    VolumeField,
    build_channel_grids,
    darcy_laplacian,
    interface_zeros,
    resample,
)
from .cutoff import Cutoff
from .errors import InputError, RecursionInvariantError
from .solvers import SIDES, ElementaryProblemSpec, solve_elementary

COMPAT_TOL = 1e-10
MAX_ORDER = 6
QUANTITIES = ("u", "v", "p", "du", "dv")


@dataclass
class OrderEntry:
    j: int
    outer: SolutionPair
    T: list[BLProfile]
    N: list[BLProfile]
    Q: list[BLProfile]
    l: np.ndarray  # (2, 2, M+1) Cartesian stress data of the elementary problem
    h: np.ndarray  # (2, M+1) normal-jump data
    gauge_shift: complex = 0j  # constant later added to this order's pressures
    residuals: dict = field(default_factory=dict)


@dataclass
class ExpansionBundle:
    geometry: SlabGeometry
    params: PhysicalParams
    data: ProblemData
    grids: ChannelGrids
    orders: list[OrderEntry]
    lap_d: float = 0.0

    @property
    def J(self) -> int:
        return len(self.orders) - 1

    @property
    def s(self) -> float:
        return float(np.sqrt(self.params.kappa))

    @property
    def n_modes(self) -> int:
        return self.data.n_modes

    @property
    def cutoff(self) -> Cutoff:
        return Cutoff(self.geometry.b)

    def degree_table(self) -> list[dict]:
        rows = []
        for e in self.orders:
            rows.append({
                "j": e.j,
                "tangential": [p.degree for p in e.T],
                "normal": [p.degree for p in e.N],
                "pressure": [p.degree for p in e.Q],
            })
        return rows

    def to_json(self) -> str:
        def cplx(a):
            a = np.asarray(a)
            return {"re": np.round(a.real, 15).tolist(), "im": np.round(a.imag, 15).tolist()}

        def prof(p: BLProfile):
            return {"degree": p.degree, "coeffs": cplx(p.coeffs)}

        out = {
            "order": self.J,
            "s": self.s,
            "n_modes": self.n_modes,
            "orders": [],
        }
        for e in self.orders:
            out["orders"].append({
                "j": e.j,
                "gauge_shift": [e.gauge_shift.real, e.gauge_shift.imag],
                "l": cplx(e.l),
                "h": cplx(e.h),
                "tangential": [prof(p) for p in e.T],
                "normal": [prof(p) for p in e.N],
                "pressure": [prof(p) for p in e.Q],
                "residuals": {k: float(v) for k, v in e.residuals.items()},
            })
        return json.dumps(out, sort_keys=True, indent=1)


# -- helpers -----------------------------------------------------------------


def _traces(sol: SolutionPair, comp: int) -> tuple[dict, dict]:
    fname, fend, pend = SIDES[comp]
    F = {q: sol.trace(q, fname, fend) for q in QUANTITIES}
    P = {q: sol.trace(q, "porous", pend) for q in QUANTITIES}
    return F, P


def _tangential_seed(sol, comp, k, prm: PhysicalParams, geo: SlabGeometry, Ht=None) -> np.ndarray:
    """Layer trace forced by the tangential slip condition: (v+ - vbar).t - (mu/alpha)(Du+ + ik v+) n2 [+ Ht/alpha]."""
    F, P = _traces(sol, comp)
    n2 = geo.n2(comp)
    seed = (F["u"] - P["u"]) - (prm.mu / prm.alpha) * n2 * (F["du"] + 1j * k * F["v"])
    if Ht is not None:
        seed = seed + Ht / prm.alpha
    return seed


def _zero(s, M):
    return BLProfile.zero(s, M)


def _prune(p: BLProfile, comp: int) -> BLProfile:
    """Tag with the interface component; exactly vanishing profiles become structural zeros."""
    if p.degree >= 0 and not np.any(p.coeffs):
        return BLProfile.zero(p.s, p.n_modes, comp)
    return replace(p, component=comp)


def _get(lst: list, i: int, comp: int, s: float, M: int) -> BLProfile:
    return lst[i][comp] if i >= 0 else _zero(s, M)


def forcing_sequence(g_minus: VolumeField, j: int, kappa: float, geometry: SlabGeometry) -> VolumeField:
    """Porous forcing at order j: g for j = 0, (Lap - grad div)^{j/2} g / kappa^{j/2} for even j, 0 for odd j."""
    M = g_minus.n_modes
    if j == 0:
        return g_minus
    if j % 2 == 1:
        return VolumeField.zero(g_minus.L, M)
    ks = geometry.wavenumbers(M)
    profiles = []
    for m, prof in enumerate(g_minus.profiles):
        if prof is not None and not isinstance(prof, SympyProfile):
            raise InputError("orders >= 2 need symbolic porous forcing (SympyProfile) to form its Laplacian")
        for _ in range(j // 2):
            prof = darcy_laplacian(prof, ks[m], kappa)
        profiles.append(prof)
    return VolumeField(g_minus.L, tuple(profiles))


def _check_degree(name: str, p: BLProfile, bound: int, j: int, comp: int):
    if p.degree > bound:
        raise RecursionInvariantError(
            "degree_bound", f"order {j}, component {comp}: deg {name} = {p.degree} exceeds {bound}")


# -- construction --------------------------------------------------------------


def _solve_outer(bundle_ctx, j: int, l_j: np.ndarray, h_j: np.ndarray) -> SolutionPair:
    geo, prm, data, grids = bundle_ctx
    M = data.n_modes
    gm = forcing_sequence(data.g_minus, j, prm.kappa, geo)
    gp = data.g_plus if j == 0 else VolumeField.zero(geo.L, M)
    return solve_elementary(ElementaryProblemSpec(geo, prm, gm, gp, l_j, h_j), grids)


def build_order0(data: ProblemData, geometry: SlabGeometry, params: PhysicalParams,
                 grids: ChannelGrids | None = None, n_points: int = 32) -> ExpansionBundle:
    grids = grids or build_channel_grids(geometry, n_points)
    M = data.n_modes
    s = float(np.sqrt(params.kappa))
    k = geometry.wavenumbers(M)
    h0 = np.zeros((2, M + 1), dtype=complex)
    outer = _solve_outer((geometry, params, data, grids), 0, data.l.copy(), h0)
    H = data.h + 0.5 * data.l
    T, N, Q = [], [], []
    for comp in (0, 1):
        seed = _tangential_seed(outer, comp, k, params, geometry, Ht=H[comp, 0])
        T.append(_prune(bl_ode_solve(_zero(s, M), cf_extend(seed)), comp))
        N.append(BLProfile.zero(s, M, comp))
        Q.append(BLProfile.zero(s, M, comp))
    entry = OrderEntry(0, outer, T, N, Q, data.l.copy(), h0)
    bundle = ExpansionBundle(geometry, params, data, grids, [entry])
    entry.residuals = order_residuals(bundle, 0)
    return bundle


def build_order1(bundle: ExpansionBundle) -> ExpansionBundle:
    return build_orderj(bundle, 1)


def build_orderj(bundle: ExpansionBundle, j: int) -> ExpansionBundle:
    """Append order j (requires orders < j); order 1 is the same formula with empty lower terms."""
    if j != bundle.J + 1:
        raise ValueError(f"next order must be {bundle.J + 1}, got {j}")
    if j > MAX_ORDER:
        raise InputError(f"order {j} exceeds the supported maximum {MAX_ORDER}")
    geo, prm, data, grids = bundle.geometry, bundle.params, bundle.data, bundle.grids
    M = data.n_modes
    s, kap, beta, mu = bundle.s, prm.kappa, prm.beta, prm.mu
    k = geo.wavenumbers(M)
    lap_d = bundle.lap_d
    Ts = [e.T for e in bundle.orders]
    Ns = [e.N for e in bundle.orders]
    Qs = [e.Q for e in bundle.orders]
    H = data.h + 0.5 * data.l

    N_j, Q_j = [], []
    l_j = interface_zeros(M)
    h_j = np.zeros((2, M + 1), dtype=complex)
    for comp in (0, 1):
        n2 = geo.n2(comp)
        T1, N1 = _get(Ts, j - 1, comp, s, M), _get(Ns, j - 1, comp, s, M)
        T2, N2 = _get(Ts, j - 2, comp, s, M), _get(Ns, j - 2, comp, s, M)
        N3 = _get(Ns, j - 3, comp, s, M)
        Q1 = _get(Qs, j - 1, comp, s, M)

        Nj = -bl_tail_integral(slow_div(T1, N1, k, lap_d))
        if j >= 2:
            dN2 = bl_dz(N2)
            acc = (-bl_dz(bl_dz(N1))) + N1.scale(kap) - profile_shift(Q1) - profile_shift(dN2).scale(2.0)
            if lap_d:
                acc = acc - dN2.scale(lap_d)
            acc = acc - profile_lap(N3, k, lap_d)
            Qj = -bl_tail_integral(acc)
        else:
            Qj = _zero(s, M)
        N_j.append(_prune(Nj, comp))
        Q_j.append(_prune(Qj, comp))

        # stress data l_j (tangential, normal)
        lt = -cf_trace(bl_dz(T1).at_zero())
        ln = -2.0 * cf_trace(bl_dz(N1).at_zero()) + (beta / 2) * Nj.trace() - Qj.trace()
        hj = Nj.trace()
        if j >= 2:
            prev = bundle.orders[j - 2].outer
            F, P = _traces(prev, comp)
            lt = lt + n2 * (P["du"] + 1j * k * P["v"]) + cf_trace(profile_dx(N2, k).at_zero()) \
                - cf_trace(profile_shift(T2).at_zero())
            ln = ln + 2.0 * P["dv"] - 2.0 * cf_trace(profile_shift(N2).at_zero())
            hj = hj + 2 * mu * F["dv"] - F["p"] - (beta / 4) * (n2 * (F["v"] + P["v"]) + N2.trace())
            if j == 2:
                hj = hj - H[comp, 1] * n2
        l_j[comp, 0] = lt
        l_j[comp, 1] = ln * n2
        h_j[comp] = hj

    shift = 0j
    if j >= 2:
        # one constant added to both pressures of order j-2 makes h_j compatible
        shift = 0.5 * (h_j[0, 0] + h_j[1, 0])
        prev = bundle.orders[j - 2]
        for name, arr in prev.outer.modes[0].p.items():
            arr += shift
        prev.gauge_shift += shift
        prev.outer.gauge["shift"] = complex(prev.gauge_shift)
        h_j[:, 0] -= shift
    defect = abs(h_j[0, 0] + h_j[1, 0])
    if defect > COMPAT_TOL * max(1.0, float(np.max(np.abs(h_j)))):
        raise RecursionInvariantError("compatibility", f"order {j}: interface mean of h_j = {defect:.3e}")
    h_j[:, 0] = h_j[:, 0].real
    l_j[:, :, 0] = l_j[:, :, 0].real

    outer = _solve_outer((geo, prm, data, grids), j, l_j, h_j)

    T_j = []
    for comp in (0, 1):
        T1 = _get(Ts, j - 1, comp, s, M)
        T2 = _get(Ts, j - 2, comp, s, M)
        dT1 = bl_dz(T1)
        rhs = (-profile_dx(Q_j[comp], k)) + profile_shift(dT1).scale(2.0)
        if lap_d:
            rhs = rhs + dT1.scale(lap_d)
        rhs = rhs + profile_lap(T2, k, lap_d)
        seed = _tangential_seed(outer, comp, k, prm, geo)
        T_j.append(_prune(bl_ode_solve(rhs, cf_extend(seed)), comp))

    for comp in (0, 1):
        _check_degree("tangential", T_j[comp], j, j, comp)
        _check_degree("normal", N_j[comp], j - 1, j, comp)
        _check_degree("pressure", Q_j[comp], j - 2, j, comp)

    entry = OrderEntry(j, outer, T_j, N_j, Q_j, l_j, h_j)
    bundle.orders.append(entry)
    entry.residuals = order_residuals(bundle, j)
    # order j-1 gains its divergence-chain row, order j-2 its shifted pressure
    for i in range(max(0, j - 2), j):
        bundle.orders[i].residuals = order_residuals(bundle, i)
    return bundle


def build_expansion(data: ProblemData, geometry: SlabGeometry, params: PhysicalParams, J: int,
                    grids: ChannelGrids | None = None, n_points: int = 32) -> ExpansionBundle:
    if J < 0 or J > MAX_ORDER:
        raise InputError(f"order must be in [0, {MAX_ORDER}], got {J}")
    bundle = build_order0(data, geometry, params, grids, n_points)
    for j in range(1, J + 1):
        build_orderj(bundle, j)
    return bundle


# -- residual checks -----------------------------------------------------------


def order_residuals(bundle: ExpansionBundle, j: int) -> dict[str, float]:
    """Interface residuals of order j: tangential slip row and elementary stress/jump rows."""
    geo, prm = bundle.geometry, bundle.params
    M = bundle.n_modes
    k = geo.wavenumbers(M)
    e = bundle.orders[j]
    H = bundle.data.h + 0.5 * bundle.data.l
    slip = stress_t = stress_n = jump = divchain = 0.0
    nxt = bundle.orders[j + 1] if j + 1 <= bundle.J else None
    for comp in (0, 1):
        n2 = geo.n2(comp)
        F, P = _traces(e.outer, comp)
        tau = prm.mu * n2 * (F["du"] + 1j * k * F["v"])
        r = prm.alpha * (F["u"] - P["u"] - e.T[comp].trace()) - tau
        if j == 0:
            r = r + H[comp, 0]
        slip = max(slip, float(np.max(np.abs(r))))
        stress_t = max(stress_t, float(np.max(np.abs(tau - e.l[comp, 0]))))
        sn = 2 * prm.mu * F["dv"] - F["p"] + P["p"] - (prm.beta / 2) * n2 * (F["v"] + P["v"]) - e.l[comp, 1] * n2
        # pressure shifts of this order act on both sides alike
        stress_n = max(stress_n, float(np.max(np.abs(sn))))
        jump = max(jump, float(np.max(np.abs(n2 * (F["v"] - P["v"]) - e.h[comp]))))
        if nxt is not None:
            chain = bl_dz(nxt.N[comp]) - slow_div(e.T[comp], e.N[comp], k, bundle.lap_d)
            divchain = max(divchain, chain.max_abs())
    out = {"slip": slip, "stress_t": stress_t, "stress_n": stress_n, "jump": jump}
    if nxt is not None:
        out["div_chain"] = divchain
    return out


# -- evaluation ------------------------------------------------------------------


def _layer_fields(bundle: ExpansionBundle, entry: OrderEntry, eps: float, y: np.ndarray) -> dict[str, np.ndarray]:
    """Per-mode layer contributions (M+1, ny) of order `entry` at porous points y."""
    geo = bundle.geometry
    M = bundle.n_modes
    k = geo.wavenumbers(M)[:, None]
    se = np.sqrt(eps)
    out = {q: np.zeros((M + 1, y.size), dtype=complex) for q in QUANTITIES}
    cut = bundle.cutoff
    for comp in (0, 1):
        n2 = geo.n2(comp)
        d = geo.chart_distance(comp, y)
        T, N, Q = entry.T[comp], entry.N[comp], entry.Q[comp]
        R = max(p.R for p in (T, N, Q)) + 1
        chi = cut.table(d, R)
        z = d / se

        def val(p):
            return p.values(z, chi)

        def dy(p):
            # d/dy of p(x, d/sqrt(eps)) = -n2 (shift p + eps^{-1/2} dz p)
            return -n2 * (val(profile_shift(p)) + val(bl_dz(p)) / se)

        out["u"] += val(T)
        out["du"] += dy(T)
        out["v"] += n2 * val(N)
        out["dv"] += n2 * dy(N)
        out["p"] += val(Q)
    out["u"] = out["u"]
    return out


def evaluate_on_grids(bundle: ExpansionBundle, eps: float, grids: ChannelGrids, order: int | None = None,
                      include_layers: bool = True) -> SolutionPair:
    """Truncated expansion sum_{j <= order} eps^{j/2} (outer + layer) as mode profiles on the given grids."""
    order = bundle.J if order is None else order
    if order > bundle.J:
        raise InputError(f"bundle holds orders up to {bundle.J}, requested {order}")
    M = bundle.n_modes
    ks = bundle.geometry.wavenumbers(M)
    modes = [ModeField.zeros(m, ks[m], grids) for m in range(M + 1)]
    y = grids.porous.nodes
    for j in range(order + 1):
        e = bundle.orders[j]
        w = eps ** (j / 2)
        outer = e.outer if e.outer.grids.signature() == grids.signature() else resample(e.outer, grids)
        layer = _layer_fields(bundle, e, eps, y) if include_layers else None
        for m, mf in enumerate(modes):
            for q in QUANTITIES:
                for name in ("top", "porous", "bottom"):
                    getattr(mf, q)[name] += w * getattr(outer.modes[m], q)[name]
                if layer is not None:
                    getattr(mf, q)["porous"] += w * layer[q][m]
    sol = SolutionPair(grids, bundle.geometry, modes)
    sol.info = {"problem": "expansion", "eps": eps, "order": order}
    return sol


def evaluate_expansion(bundle: ExpansionBundle, eps: float, point, order: int | None = None):
    """Velocity (2,) and pressure of the truncated expansion at a point (x, y)."""
    x, yv = float(point[0]), float(point[1])
    order = bundle.J if order is None else order
    geo = bundle.geometry
    name = geo.subdomain_of(yv)
    ks = geo.wavenumbers(bundle.n_modes)
    phase = np.exp(1j * ks * x)
    vel = np.zeros(2)
    pres = 0.0
    for j in range(order + 1):
        e = bundle.orders[j]
        w = eps ** (j / 2)
        vo, po = e.outer.evaluate(x, yv)
        vel += w * vo
        pres += w * po
        if name == "porous":
            lay = _layer_fields(bundle, e, eps, np.array([yv]))
            for q, slot in (("u", 0), ("v", 1)):
                c = lay[q][:, 0]
                vel[slot] += w * (c[0].real + 2.0 * (c[1:] * phase[1:]).real.sum())
            c = lay["p"][:, 0]
            pres += w * (c[0].real + 2.0 * (c[1:] * phase[1:]).real.sum())
    return vel, pres


def layer_divergence(bundle: ExpansionBundle, j: int, eps: float, y: np.ndarray) -> np.ndarray:
    """Per-mode values of the slow divergence of the order-j layer at z = d/sqrt(eps)."""
    geo = bundle.geometry
    M = bundle.n_modes
    k = geo.wavenumbers(M)
    out = np.zeros((M + 1, y.size), dtype=complex)
    e = bundle.orders[j]
    cut = bundle.cutoff
    for comp in (0, 1):
        d = geo.chart_distance(comp, y)
        div = slow_div(e.T[comp], e.N[comp], k, bundle.lap_d)
        chi = cut.table(d, div.R)
        out += div.values(d / np.sqrt(eps), chi)
    return out
