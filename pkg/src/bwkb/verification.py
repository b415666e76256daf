"""Norms, energy terms, remainder studies and the divergence defect of the truncated expansion."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (
    SUBDOMAINS,
    ChannelGrids,
    ModeField,
    PhysicalParams,
    ProblemData,
    SlabGeometry,
    SolutionPair,
    build_channel_grids,
)
from .errors import InputError
from .solvers import SIDES, FullProblemSpec, map_modes, solve_full
from .wkb import ExpansionBundle, build_expansion, evaluate_on_grids, layer_divergence

MIN_FIT_POINTS = 4


# -- norms -------------------------------------------------------------------


def parseval_weights(n_modes: int, L: float) -> np.ndarray:
    """Weights w_m with int_0^L |f|^2 dx = sum_m w_m |f_m|^2 for conjugate-symmetric stacks."""
    w = np.full(n_modes + 1, 2.0 * L)
    w[0] = L
    return w


def _volume_sq(sol: SolutionPair, name: str, fn) -> float:
    """sum_m w_m int |fn(mode)|^2 dy over one subdomain; fn returns a list of profiles."""
    g = sol.grids[name]
    w = parseval_weights(sol.n_modes, sol.geometry.L)
    total = 0.0
    for m, mf in enumerate(sol.modes):
        for prof in fn(mf, name):
            total += w[m] * float(g.integrate(np.abs(prof) ** 2).real)
    return total


def _velocity(mf: ModeField, n):
    return [mf.u[n], mf.v[n]]


def _gradient(mf: ModeField, n):
    ik = 1j * mf.k
    return [ik * mf.u[n], mf.du[n], ik * mf.v[n], mf.dv[n]]


def _symgrad(mf: ModeField, n):
    ik = 1j * mf.k
    off = 0.5 * (mf.du[n] + ik * mf.v[n])
    # |d(v)|^2 = d11^2 + d22^2 + 2 d12^2
    return [ik * mf.u[n], mf.dv[n], np.sqrt(2.0) * off]


def _pressure(mf: ModeField, n):
    return [mf.p[n]]


def _interface_sq(coeffs: np.ndarray, L: float) -> float:
    """Squared L2 norm on one interface component from mode coefficients (..., M+1)."""
    c = np.atleast_2d(coeffs)
    w = parseval_weights(c.shape[-1] - 1, L)
    return float(np.sum(w * np.abs(c) ** 2))


@dataclass
class NormSet:
    l2: dict  # subdomain -> ||v||_0^2
    grad: dict  # subdomain -> ||grad v||_0^2
    symgrad: dict  # subdomain -> ||d(v)||_0^2
    pressure: dict  # subdomain -> ||p||_0^2
    jump_n: float  # ||[v.n]||^2 on Sigma
    jump: float  # ||[v]||^2 on Sigma
    avg_n: float  # ||{v.n}||^2 on Sigma

    def h1_sq(self, names) -> float:
        return sum(self.l2[n] + self.grad[n] for n in names)


def compute_norms(sol: SolutionPair, geometry: SlabGeometry | None = None) -> NormSet:
    """Squared L2/H1 norms per subdomain (Parseval in x, quadrature in y) and interface norms."""
    geo = geometry or sol.geometry
    if geometry is not None and geometry != sol.geometry:
        raise InputError("solution was computed on a different geometry")
    for mf in sol.modes:
        for n in mf.subdomains():
            if mf.u[n].shape != (sol.grids[n].size,):
                raise InputError(f"mode {mf.m}: profile length does not match the {n} grid")
    names = sol.modes[0].subdomains()
    out = NormSet({}, {}, {}, {}, 0.0, 0.0, 0.0)
    for n in names:
        out.l2[n] = _volume_sq(sol, n, _velocity)
        out.grad[n] = _volume_sq(sol, n, _gradient)
        out.symgrad[n] = _volume_sq(sol, n, _symgrad)
        out.pressure[n] = _volume_sq(sol, n, _pressure)
    if "porous" in names:
        for comp, (fname, fend, pend) in SIDES.items():
            if fname not in names:
                continue
            n2 = geo.n2(comp)
            du = sol.trace("u", fname, fend) - sol.trace("u", "porous", pend)
            dv = sol.trace("v", fname, fend) - sol.trace("v", "porous", pend)
            av = 0.5 * (sol.trace("v", fname, fend) + sol.trace("v", "porous", pend))
            out.jump_n += _interface_sq(n2 * dv, geo.L)
            out.jump += _interface_sq(np.stack([du, dv]), geo.L)
            out.avg_n += _interface_sq(n2 * av, geo.L)
    return out


def data_norm_sq(data: ProblemData, grids: ChannelGrids) -> float:
    """||g||^2 over the channel plus ||h||^2 + ||l||^2 over Sigma."""
    geo = data.geometry
    w = parseval_weights(data.n_modes, geo.L)
    total = 0.0
    for name, g in grids.items():
        fieldv = data.g_minus if name == "porous" else data.g_plus
        for m in range(data.n_modes + 1):
            vals = fieldv.mode(m, g.nodes)
            total += w[m] * float(g.integrate(np.sum(np.abs(vals) ** 2, axis=0)).real)
    for arr in (data.h, data.l):
        for comp in (0, 1):
            total += _interface_sq(arr[comp], geo.L)
    return total


def difference(a: SolutionPair, b: SolutionPair) -> SolutionPair:
    if a.grids.signature() != b.grids.signature() or a.n_modes != b.n_modes:
        raise InputError("solutions live on different grids or mode counts")
    modes = [ma.combine(mb, 1.0, -1.0) for ma, mb in zip(a.modes, b.modes)]
    return SolutionPair(a.grids, a.geometry, modes)


# -- energy --------------------------------------------------------------------


@dataclass
class EnergyReport:
    eps: float
    symgrad_minus: float  # eps ||d(v-)||^2
    l2_minus: float  # kappa/4 ||v-||^2
    h1_plus: float  # mu C^2/3 ||v+||_1^2
    jump_n: float  # 1/(4 eps) ||[v.n]||^2
    jump: float  # alpha/4 ||[v]||^2
    avg_n: float  # beta/4 ||{v.n}||^2
    data_norm: float
    ratio: float | None
    warnings: list = field(default_factory=list)

    @property
    def lhs(self) -> float:
        return self.symgrad_minus + self.l2_minus + self.h1_plus + self.jump_n + self.jump + self.avg_n


def energy_terms(sol: SolutionPair, params: PhysicalParams, eps: float, data_norm: float,
                 poincare: float = 1.0) -> EnergyReport:
    ns = compute_norms(sol)
    prm = params
    rep = EnergyReport(
        eps=eps,
        symgrad_minus=eps * ns.symgrad["porous"],
        l2_minus=prm.kappa / 4 * ns.l2["porous"],
        h1_plus=prm.mu * poincare**2 / 3 * ns.h1_sq(("top", "bottom")),
        jump_n=ns.jump_n / (4 * eps),
        jump=prm.alpha / 4 * ns.jump,
        avg_n=prm.beta / 4 * ns.avg_n,
        data_norm=data_norm,
        ratio=None,
        warnings=list(sol.warnings),
    )
    rep.ratio = rep.lhs / data_norm if data_norm > 0 else None
    return rep


def _check_eps_list(eps_list) -> list[float]:
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise InputError("eps list is empty")
    if any(e <= 0 for e in eps_list):
        raise InputError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InputError("eps list must be strictly descending")
    return eps_list


def energy_check(data: ProblemData, geometry: SlabGeometry, params: PhysicalParams, eps_list,
                 n_points: int = 32, poincare: float = 1.0, grid_kw: dict | None = None) -> list[EnergyReport]:
    eps_list = _check_eps_list(eps_list)
    out = []
    for eps in eps_list:
        grids = build_channel_grids(geometry, n_points, eps=eps, kappa=params.kappa, **(grid_kw or {}))
        sol = solve_full(FullProblemSpec(geometry, params.with_eps(eps), data), grids)
        out.append(energy_terms(sol, params, eps, data_norm_sq(data, grids), poincare))
    return out


def energy_uniform(reports: list[EnergyReport]) -> tuple[bool, float | None]:
    """Last ratio <= 2 x median ratio; returns (flag, max ratio). Zero data is not applicable."""
    ratios = [r.ratio for r in reports if r.ratio is not None]
    if not ratios:
        return True, None
    return bool(ratios[-1] <= 2.0 * float(np.median(ratios))), float(max(ratios))


def _inner(f: np.ndarray, g: np.ndarray, w: np.ndarray) -> float:
    """Real pairing of two conjugate-symmetric mode stacks (..., M+1)."""
    return float(np.sum(w * (f * np.conj(g)).real))


def energy_identity(sol: SolutionPair, data: ProblemData, params: PhysicalParams, eps: float) -> tuple[float, float]:
    """Both sides of the weak form tested with the solution itself: (a_eps(v, v), b(v)).

    Integrating the strong form by parts against v gives
    b(v) = (g, v) - <h, [v]> - <l, {v}> for the interface laws as solved here.
    """
    geo = sol.geometry
    ns = compute_norms(sol)
    w = parseval_weights(sol.n_modes, geo.L)
    a = (2 * eps * ns.symgrad["porous"] + params.kappa * ns.l2["porous"]
         + 2 * params.mu * (ns.symgrad["top"] + ns.symgrad["bottom"]))
    b = 0.0
    for name, g in sol.grids.items():
        fieldv = data.g_minus if name == "porous" else data.g_plus
        for m, mf in enumerate(sol.modes):
            gm = fieldv.mode(m, g.nodes)
            dot = gm[0] * np.conj(mf.u[name]) + gm[1] * np.conj(mf.v[name])
            b += w[m] * float(g.integrate(dot).real)
    for comp, (fname, fend, pend) in SIDES.items():
        n2 = geo.n2(comp)
        plus = np.stack([sol.trace(q, fname, fend) for q in ("u", "v")])
        minus = np.stack([sol.trace(q, "porous", pend) for q in ("u", "v")])
        jump, avg = plus - minus, 0.5 * (plus + minus)
        a += params.beta * _interface_sq(n2 * avg[1], geo.L) + params.alpha * _interface_sq(jump[0], geo.L)
        a += _interface_sq(n2 * jump[1], geo.L) / eps
        b -= _inner(data.h[comp], jump, w) + _inner(data.l[comp], avg, w)
    return a, b


# -- remainder -----------------------------------------------------------------


@dataclass
class RemainderPoint:
    eps: float
    k: int
    l2_minus: float  # ||r-||_0
    grad_minus: float  # ||grad r-||_0
    h1_plus: float  # ||r+||_1
    combined: float  # eps ||grad r-||^2 + kappa/4 ||r-||^2 + mu C^2/3 ||r+||_1^2
    flagged: bool = False


@dataclass
class RemainderReport:
    k: int
    points: list[RemainderPoint]
    fitted_slope: float
    theory_slope: float
    leading_slope: float | None = None  # slope of ||v - v0 - layer0||_0 over the slab (order-0 truncation)
    leading_l2: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.fitted_slope) and self.fitted_slope >= self.theory_slope - 0.2)


def fit_slope(eps, values) -> float:
    """Least-squares slope of log(values) against log(eps)."""
    x, y = np.log(np.asarray(eps, float)), np.log(np.asarray(values, float))
    if x.size < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def remainder_point(full: SolutionPair, bundle: ExpansionBundle, eps: float, k: int,
                    poincare: float = 1.0) -> tuple[RemainderPoint, NormSet]:
    approx = evaluate_on_grids(bundle, eps, full.grids, order=k)
    ns = compute_norms(difference(full, approx))
    prm = bundle.params
    l2m, gm = ns.l2["porous"], ns.grad["porous"]
    h1p = ns.h1_sq(("top", "bottom"))
    combined = eps * gm + prm.kappa / 4 * l2m + prm.mu * poincare**2 / 3 * h1p
    pt = RemainderPoint(eps, k, float(np.sqrt(l2m)), float(np.sqrt(gm)), float(np.sqrt(h1p)), float(combined),
                        flagged=bool(full.warnings))
    return pt, ns


def remainder_study(data: ProblemData, geometry: SlabGeometry, params: PhysicalParams, orders, eps_list,
                    n_points: int = 32, bundle: ExpansionBundle | None = None,
                    poincare: float = 1.0, grid_kw: dict | None = None) -> list[RemainderReport]:
    """Remainder of the truncated expansion against full solves, one report per order k >= 2.

    Full solves are shared across orders; points whose full solve carries a resolution
    warning are flagged and left out of the slope fit.
    """
    orders = [int(k) for k in np.atleast_1d(orders)]
    if min(orders) < 2:
        raise InputError("remainder orders must be >= 2")
    eps_list = _check_eps_list(eps_list)
    if bundle is None:
        bundle = build_expansion(data, geometry, params, max(orders),
                                 grids=build_channel_grids(geometry, n_points, **(grid_kw or {})))
    if bundle.J < max(orders):
        raise InputError(f"bundle holds orders up to {bundle.J}, requested {max(orders)}")

    def one(eps):
        grids = build_channel_grids(geometry, n_points, eps=eps, kappa=params.kappa, **(grid_kw or {}))
        return solve_full(FullProblemSpec(geometry, params.with_eps(eps), data), grids)

    fulls = map_modes(one, eps_list)
    reports = []
    for k in orders:
        pts = [remainder_point(f, bundle, e, k, poincare)[0] for f, e in zip(fulls, eps_list)]
        reports.append(_report(k, pts))
    # leading-order truncation over the slab, order 0 only
    lead = []
    for f, e in zip(fulls, eps_list):
        approx = evaluate_on_grids(bundle, e, f.grids, order=0)
        lead.append(float(np.sqrt(compute_norms(difference(f, approx)).l2["porous"])))
    ok = [not f.warnings for f in fulls]
    for r in reports:
        r.leading_l2 = lead
        r.leading_slope = fit_slope(np.array(eps_list)[ok], np.array(lead)[ok]) if sum(ok) >= 2 else None
    return reports


def _report(k: int, pts: list[RemainderPoint]) -> RemainderReport:
    use = [p for p in pts if not p.flagged]
    if len(use) < MIN_FIT_POINTS:
        slope = float("nan")
    else:
        slope = fit_slope([p.eps for p in use], [p.combined for p in use])
    return RemainderReport(k, pts, slope, (k - 2) / 2)


# -- divergence defect -----------------------------------------------------------


@dataclass
class DivergenceDefect:
    eps: float
    k: int
    nodal: float  # ||div of the truncated expansion||_0 over the slab
    closed_form: float  # ||eps^{k/2} slow divergence of the order-k layer||_0

    @property
    def rel_diff(self) -> float:
        scale = max(self.nodal, self.closed_form)
        return abs(self.nodal - self.closed_form) / scale if scale > 0 else 0.0


def divergence_defect(bundle: ExpansionBundle, k: int, eps: float, grids: ChannelGrids | None = None,
                      n_points: int = 32, grid_kw: dict | None = None) -> DivergenceDefect:
    geo = bundle.geometry
    grids = grids or build_channel_grids(geo, n_points, eps=eps, kappa=bundle.params.kappa, **(grid_kw or {}))
    g = grids.porous
    w = parseval_weights(bundle.n_modes, geo.L)
    approx = evaluate_on_grids(bundle, eps, grids, order=k)
    nodal = sum(w[m] * float(g.integrate(np.abs(1j * mf.k * mf.u["porous"] + mf.dv["porous"]) ** 2).real)
                for m, mf in enumerate(approx.modes))
    div = eps ** (k / 2) * layer_divergence(bundle, k, eps, g.nodes)
    closed = sum(w[m] * float(g.integrate(np.abs(div[m]) ** 2).real) for m in range(bundle.n_modes + 1))
    return DivergenceDefect(eps, k, float(np.sqrt(nodal)), float(np.sqrt(closed)))


def defect_scaling(bundle: ExpansionBundle, k: int, eps_list, n_points: int = 32,
                   grid_kw: dict | None = None) -> tuple[list, float, float]:
    """Defects over an eps grid, fitted exponent and the layer-integral prediction k/2 + 1/4."""
    eps_list = _check_eps_list(eps_list)
    defects = [divergence_defect(bundle, k, e, n_points=n_points, grid_kw=grid_kw) for e in eps_list]
    return defects, fit_slope(eps_list, [d.closed_form for d in defects]), k / 2 + 0.25


# -- export ------------------------------------------------------------------------


CSV_COLUMNS = ("eps", "k", "l2_minus", "grad_minus", "h1_plus", "combined", "flagged", "fitted_slope",
               "theory_slope")


def reports_to_csv(reports: list[RemainderReport]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in reports:
        for p in r.points:
            wr.writerow([f"{p.eps:.6g}", p.k, f"{p.l2_minus:.10e}", f"{p.grad_minus:.10e}", f"{p.h1_plus:.10e}",
                         f"{p.combined:.10e}", int(p.flagged), f"{r.fitted_slope:.6f}", f"{r.theory_slope:.6f}"])
    return buf.getvalue()


ENERGY_COLUMNS = ("eps", "symgrad_minus", "l2_minus", "h1_plus", "jump_n", "jump", "avg_n", "lhs", "data_norm",
                  "ratio")


def energy_to_csv(reports: list[EnergyReport]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(ENERGY_COLUMNS)
    for r in reports:
        row = [f"{r.eps:.6g}"] + [f"{getattr(r, c):.10e}" for c in ENERGY_COLUMNS[1:-3]]
        row += [f"{r.lhs:.10e}", f"{r.data_norm:.10e}", "n/a" if r.ratio is None else f"{r.ratio:.10e}"]
        wr.writerow(row)
    return buf.getvalue()


def to_json(obj) -> str:
    def conv(o):
        if isinstance(o, list):
            return [conv(x) for x in o]
        if hasattr(o, "__dataclass_fields__"):
            d = asdict(o)
            if isinstance(o, EnergyReport):
                d["lhs"] = o.lhs
            return d
        return o

    return json.dumps(conv(obj), sort_keys=True, indent=1, default=float)


__all__ = [
    "NormSet", "compute_norms", "data_norm_sq", "difference", "EnergyReport", "energy_terms", "energy_check",
    "energy_uniform", "RemainderPoint", "RemainderReport", "fit_slope", "remainder_point", "remainder_study",
    "DivergenceDefect", "divergence_defect", "defect_scaling", "reports_to_csv", "energy_to_csv", "to_json",
    "SUBDOMAINS",
]
