"""Per-mode collocation solvers for the channel problems.

For a mode k != 0 with velocity (u, v) e^{ikx}, incompressibility gives u = (i/k) v'.
Velocity-vorticity-like unknowns (v, w = v'' - k^2 v) turn the momentum balance
-nu Lap v + grad p + kappa v = g into the coupled second-order pair

    w = (D^2 - k^2) v,      nu (D^2 - k^2) w - kappa w = k^2 g_y + i k D g_x,

and the pressure is recovered as p = -i g_x / k + (nu D w - kappa D v) / k^2.
Mode 0 has v' = 0, so only u and the pressure constants remain.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ChannelGrids,
    ModeField,
    PhysicalParams,
    ProblemData,
    SlabGeometry,
    SolutionPair,
    VolumeField,
)
from .errors import CompatibilityError, InputError, SingularSystemError, SolverError
from .spectral import CompositeGrid, DenseSystem, solve_dense

RESOLUTION_TOL = 1e-6
COMPAT_RTOL = 1e-12

# (fluid subdomain, fluid end, porous end) for each interface component
SIDES = {0: ("top", "lo", "hi"), 1: ("bottom", "hi", "lo")}
WALLS = (("top", "hi"), ("bottom", "lo"))


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("BWKB_THREADS", "1")))
    except ValueError:
        return 1


def map_modes(fn, modes):
    modes = list(modes)
    nt = n_threads()
    if nt == 1 or len(modes) == 1:
        return [fn(m) for m in modes]
    with ThreadPoolExecutor(max_workers=nt) as pool:
        return list(pool.map(fn, modes))


# -- linear functionals over block unknowns -------------------------------


class Lin:
    """Affine functional sum_block terms[block] . x_block + const."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms = terms or {}
        self.const = complex(const)

    def __add__(self, other):
        if not isinstance(other, Lin):
            return Lin(dict(self.terms), self.const + other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms[k] + v if k in terms else v
        return Lin(terms, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return Lin({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, a):
        return Lin({k: a * v for k, v in self.terms.items()}, a * self.const)

    __rmul__ = __mul__


class _Block:
    nvar = 1

    def __init__(self, name: str, grid: CompositeGrid):
        self.name = name
        self.grid = grid
        self.n = grid.size
        self.size = self.nvar * self.n
        self.D1 = grid.D1
        self.D2 = grid.D2

    def _lin(self, var: int, row: np.ndarray, const=0.0) -> Lin:
        vec = np.zeros(self.size, dtype=complex)
        vec[var * self.n:(var + 1) * self.n] = row
        return Lin({self.name: vec}, const)

    def val(self, i: int, var: int = 0) -> Lin:
        row = np.zeros(self.n)
        row[i] = 1.0
        return self._lin(var, row)

    def d1(self, i: int, var: int = 0) -> Lin:
        return self._lin(var, self.D1[i])

    def d2(self, i: int, var: int = 0) -> Lin:
        return self._lin(var, self.D2[i])

    def end(self, where: str) -> int:
        return self.grid.endpoint_index(where)

    def interior_nodes(self) -> list[int]:
        out = []
        for s in self.grid.slices():
            out.extend(range(s.start + 1, s.stop - 1))
        return out

    def junction_rows(self) -> list[Lin]:
        rows = []
        sl = self.grid.slices()
        for a, b in zip(sl[:-1], sl[1:]):
            i, j = a.stop - 1, b.start
            for var in range(self.nvar):
                rows.append(self.val(i, var) - self.val(j, var))
                rows.append(self.d1(i, var) - self.d1(j, var))
        return rows

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        return [x[v * self.n:(v + 1) * self.n] for v in range(self.nvar)]


class VWBlock(_Block):
    """Stokes (kappa = 0) or Brinkman strip for a mode k != 0."""

    nvar = 2

    def __init__(self, name, grid, k, nu, kappa, g):
        super().__init__(name, grid)
        self.k, self.nu, self.kappa, self.g = k, nu, kappa, g

    def interior_rows(self) -> list[Lin]:
        k2 = self.k**2
        f = k2 * self.g["gy"] + 1j * self.k * self.g["dgx"]
        rows = []
        for i in self.interior_nodes():
            rows.append(self.val(i, 1) - self.d2(i, 0) + k2 * self.val(i, 0))
            rows.append(self.nu * (self.d2(i, 1) - k2 * self.val(i, 1)) - self.kappa * self.val(i, 1) - f[i])
        return rows

    def v(self, i):
        return self.val(i, 0)

    def dv(self, i):
        return self.d1(i, 0)

    def u(self, i):
        return (1j / self.k) * self.d1(i, 0)

    def du(self, i):
        return (1j / self.k) * self.d2(i, 0)

    def p(self, i):
        k2 = self.k**2
        return (self.nu / k2) * self.d1(i, 1) - (self.kappa / k2) * self.d1(i, 0) + (-1j * self.g["gx"][i] / self.k)

    def tau(self, i, n2):
        """Tangential viscous traction nu (Du + ik v) n2."""
        return (self.nu * n2) * (self.du(i) + 1j * self.k * self.v(i))

    def fields(self, x):
        v, w = self.split(x)
        dv = self.D1 @ v
        d2v = self.D2 @ v
        k, k2 = self.k, self.k**2
        p = -1j * self.g["gx"] / k + (self.nu * (self.D1 @ w) - self.kappa * dv) / k2
        return dict(u=(1j / k) * dv, v=v, p=p, du=(1j / k) * d2v, dv=dv)


class DarcyBlock(_Block):
    """Pressure formulation of kappa v + grad p = g, div v = 0 for a mode k."""

    def __init__(self, name, grid, k, kappa, g):
        super().__init__(name, grid)
        self.k, self.kappa, self.g = k, kappa, g

    def interior_rows(self) -> list[Lin]:
        f = 1j * self.k * self.g["gx"] + self.g["dgy"]
        return [self.d2(i) - self.k**2 * self.val(i) - f[i] for i in self.interior_nodes()]

    def p(self, i):
        return self.val(i)

    def v(self, i):
        return (-1.0 / self.kappa) * self.d1(i) + self.g["gy"][i] / self.kappa

    def fields(self, x):
        p = x
        dp = self.D1 @ p
        k, kap = self.k, self.kappa
        return dict(
            u=(self.g["gx"] - 1j * k * p) / kap,
            v=(self.g["gy"] - dp) / kap,
            p=p,
            du=(self.g["dgx"] - 1j * k * dp) / kap,
            dv=-(1j * k * self.g["gx"] + k**2 * p) / kap,
        )


class UBlock(_Block):
    """-nu u'' + kappa u = g_x for mode 0."""

    def __init__(self, name, grid, nu, kappa, gx):
        super().__init__(name, grid)
        self.nu, self.kappa, self.gx = nu, kappa, gx

    def interior_rows(self) -> list[Lin]:
        return [-self.nu * self.d2(i) + self.kappa * self.val(i) - self.gx[i] for i in self.interior_nodes()]


def _solve_rows(blocks: list[_Block], rows: list[Lin], mode: int):
    offsets, total = {}, 0
    for b in blocks:
        offsets[b.name] = total
        total += b.size
    if len(rows) != total:
        raise RuntimeError(f"mode {mode}: assembled {len(rows)} rows for {total} unknowns")
    A = np.zeros((total, total), dtype=complex)
    rhs = np.zeros(total, dtype=complex)
    for r, lin in enumerate(rows):
        for name, vec in lin.terms.items():
            o = offsets[name]
            A[r, o:o + vec.size] += vec
        rhs[r] = -lin.const
    system = DenseSystem(A, rhs)
    try:
        x = solve_dense(system)
    except SingularSystemError as exc:
        raise SolverError(mode, exc) from exc
    return {b.name: x[offsets[b.name]:offsets[b.name] + b.size] for b in blocks}, system


# -- data sampling ---------------------------------------------------------


def sample_field(fieldv: VolumeField, m: int, grid: CompositeGrid) -> dict[str, np.ndarray]:
    y = grid.nodes
    n = y.size
    prof = fieldv.profiles[m] if m < len(fieldv.profiles) else None
    if prof is None:
        z = np.zeros(n, dtype=complex)
        return dict(gx=z, gy=z, dgx=z, dgy=z)
    g = np.asarray(prof(y), dtype=complex).reshape(2, n)
    if hasattr(prof, "deriv"):
        dg = np.asarray(prof.deriv(1)(y), dtype=complex).reshape(2, n)
    else:
        dg = grid.diff(g)
    return dict(gx=g[0], gy=g[1], dgx=dg[0], dgy=dg[1])


def _tn(arr: np.ndarray, comp: int, m: int, geometry: SlabGeometry) -> tuple[complex, complex]:
    """Tangential and normal parts of Cartesian interface data."""
    return complex(arr[comp, 0, m]), complex(arr[comp, 1, m]) * geometry.n2(comp)


def _pack(m, k, fields: dict[str, dict[str, np.ndarray]]) -> ModeField:
    return ModeField(
        m, k,
        {n: f["u"] for n, f in fields.items()},
        {n: f["v"] for n, f in fields.items()},
        {n: f["p"] for n, f in fields.items()},
        {n: f["du"] for n, f in fields.items()},
        {n: f["dv"] for n, f in fields.items()},
    )


def _check_grids(geometry: SlabGeometry, grids: ChannelGrids):
    ok = (
        np.isclose(grids.top.lo, 0.0) and np.isclose(grids.top.hi, geometry.a)
        and np.isclose(grids.porous.lo, -geometry.b) and np.isclose(grids.porous.hi, 0.0)
        and np.isclose(grids.bottom.lo, -geometry.b - geometry.c) and np.isclose(grids.bottom.hi, -geometry.b)
    )
    if not ok:
        raise InputError("grids do not match the geometry")


# -- full epsilon problem --------------------------------------------------


@dataclass(frozen=True)
class FullProblemSpec:
    geometry: SlabGeometry
    params: PhysicalParams
    data: ProblemData


def _full_mode(spec: FullProblemSpec, grids: ChannelGrids, m: int) -> ModeField:
    geo, prm, data = spec.geometry, spec.params, spec.data
    k = geo.wavenumbers(data.n_modes)[m]
    eps, mu, kap, alpha, beta = prm.eps, prm.mu, prm.kappa, prm.alpha, prm.beta
    gs = {
        "top": sample_field(data.g_plus, m, grids.top),
        "porous": sample_field(data.g_minus, m, grids.porous),
        "bottom": sample_field(data.g_plus, m, grids.bottom),
    }
    H = data.h + 0.5 * data.l
    if m == 0:
        return _full_mode0(spec, grids, gs)
    blocks = {
        "top": VWBlock("top", grids.top, k, mu, 0.0, gs["top"]),
        "porous": VWBlock("porous", grids.porous, k, eps, kap, gs["porous"]),
        "bottom": VWBlock("bottom", grids.bottom, k, mu, 0.0, gs["bottom"]),
    }
    rows = []
    for b in blocks.values():
        rows += b.interior_rows() + b.junction_rows()
    for name, where in WALLS:
        b = blocks[name]
        i = b.end(where)
        rows += [b.v(i), b.dv(i)]
    P = blocks["porous"]
    for comp, (fname, fend, pend) in SIDES.items():
        F = blocks[fname]
        i, j = F.end(fend), P.end(pend)
        n2 = geo.n2(comp)
        lt, ln = _tn(data.l, comp, m, geo)
        Ht, Hn = _tn(H, comp, m, geo)
        tauF, tauP = F.tau(i, n2), P.tau(j, n2)
        vsum = n2 * (F.v(i) + P.v(j))
        rows.append(tauF - tauP - lt)
        rows.append((2 * mu * F.dv(i) - F.p(i)) - (2 * eps * P.dv(j) - P.p(j)) - (beta / 2) * vsum - ln)
        rows.append(alpha * (F.u(i) - P.u(j)) - tauF + Ht)
        rows.append((n2 / eps) * (F.v(i) - P.v(j)) - 2 * mu * F.dv(i) + F.p(i) + (beta / 4) * vsum + Hn)
    sol, _ = _solve_rows(list(blocks.values()), rows, m)
    return _pack(m, k, {n: b.fields(sol[n]) for n, b in blocks.items()})


def _full_mode0(spec: FullProblemSpec, grids: ChannelGrids, gs) -> ModeField:
    geo, prm, data = spec.geometry, spec.params, spec.data
    eps, mu, kap, alpha, beta = prm.eps, prm.mu, prm.kappa, prm.alpha, prm.beta
    H = data.h + 0.5 * data.l
    blocks = {
        "top": UBlock("top", grids.top, mu, 0.0, gs["top"]["gx"]),
        "porous": UBlock("porous", grids.porous, eps, kap, gs["porous"]["gx"]),
        "bottom": UBlock("bottom", grids.bottom, mu, 0.0, gs["bottom"]["gx"]),
    }
    rows = []
    for b in blocks.values():
        rows += b.interior_rows() + b.junction_rows()
    for name, where in WALLS:
        rows.append(blocks[name].val(blocks[name].end(where)))
    P = blocks["porous"]
    for comp, (fname, fend, pend) in SIDES.items():
        F = blocks[fname]
        i, j = F.end(fend), P.end(pend)
        n2 = geo.n2(comp)
        lt, _ = _tn(data.l, comp, 0, geo)
        Ht, _ = _tn(H, comp, 0, geo)
        rows.append(mu * n2 * F.d1(i) - eps * n2 * P.d1(j) - lt)
        rows.append(alpha * (F.val(i) - P.val(j)) - mu * n2 * F.d1(i) + Ht)
    sol, _ = _solve_rows(list(blocks.values()), rows, 0)

    # normal balance: unknowns V (porous v), Pt, Pm, Pb (pressure constants)
    Gt = grids.top.cumulative_integral(gs["top"]["gy"])
    Gp = grids.porous.cumulative_integral(gs["porous"]["gy"])
    Gb = grids.bottom.cumulative_integral(gs["bottom"]["gy"])
    yb = grids.porous.nodes + geo.b
    _, ln0 = _tn(data.l, 0, 0, geo)
    _, ln1 = _tn(data.l, 1, 0, geo)
    _, Hn0 = _tn(H, 0, 0, geo)
    _, Hn1 = _tn(H, 1, 0, geo)
    A = np.array([
        [-kap * geo.b - beta / 2, -1.0, 1.0, 0.0],
        [beta / 4 - 1.0 / eps, 1.0, 0.0, 0.0],
        [beta / 2, 0.0, 1.0, -1.0],
        [1.0 / eps - beta / 4, 0.0, 0.0, 1.0],
    ], dtype=complex)
    rhs = -np.array([Gp[-1] - ln0, Hn0, -Gb[-1] - ln1, Gb[-1] + Hn1], dtype=complex)
    system = DenseSystem(A, rhs)
    try:
        V, Pt, Pm, Pb = solve_dense(system)
    except SingularSystemError as exc:
        raise SolverError(0, exc) from exc
    fields = {}
    for name, b in blocks.items():
        u = sol[name]
        fields[name] = dict(u=u, du=b.grid.diff(u), dv=np.zeros_like(u))
    fields["top"].update(v=np.zeros(grids.top.size, complex), p=Pt + Gt)
    fields["bottom"].update(v=np.zeros(grids.bottom.size, complex), p=Pb + Gb)
    fields["porous"].update(v=np.full(grids.porous.size, V, dtype=complex), p=Pm + Gp - kap * V * yb)
    return _pack(0, 0.0, fields)


def porous_mean(sol: SolutionPair) -> float:
    """Mean of the porous pressure over the slab (mode 0 only contributes)."""
    g = sol.grids.porous
    return float((g.integrate(sol.modes[0].p["porous"]) / (g.hi - g.lo)).real)


def _resolution_warnings(sol: SolutionPair):
    g = sol.grids.porous
    for mf in sol.modes:
        for q in ("u", "v"):
            arr = getattr(mf, q)["porous"]
            r = g.tail_ratio(arr)
            if r > RESOLUTION_TOL and np.max(np.abs(arr)) > 0:
                sol.warnings.append(f"resolution: mode {mf.m} porous {q} tail ratio {r:.2e}")


def solve_full(spec: FullProblemSpec, grids: ChannelGrids) -> SolutionPair:
    """Full transmission problem at fixed eps, mode by mode.

    The porous pressure needs no gauge: the normal-jump condition contains p+ alone,
    which fixes the common constant.  The porous mean is recorded instead.
    """
    _check_grids(spec.geometry, grids)
    modes = map_modes(lambda m: _full_mode(spec, grids, m), range(spec.data.n_modes + 1))
    sol = SolutionPair(grids, spec.geometry, modes)
    sol.gauge = {"kind": "determined", "porous_mean": porous_mean(sol)}
    sol.info = {"problem": "full", "eps": spec.params.eps}
    _resolution_warnings(sol)
    return sol


# -- elementary Darcy-Stokes problem ----------------------------------------


@dataclass(frozen=True)
class ElementaryProblemSpec:
    """Darcy in the slab, Stokes in the strips; h is the normal-velocity jump (scalar per component)."""

    geometry: SlabGeometry
    params: PhysicalParams
    g_minus: VolumeField
    g_plus: VolumeField
    l: np.ndarray  # (2, 2, M+1) Cartesian
    h: np.ndarray  # (2, M+1)

    @property
    def n_modes(self) -> int:
        return self.h.shape[-1] - 1

    def compatibility_defect(self) -> float:
        return float(abs(self.h[0, 0] + self.h[1, 0]))

    def check(self):
        scale = max(1.0, float(np.max(np.abs(self.h)))) if self.h.size else 1.0
        if self.compatibility_defect() > COMPAT_RTOL * scale:
            raise CompatibilityError(
                f"normal jump data has nonzero mean over the interface: {self.compatibility_defect():.3e}")


def _elementary_mode(spec: ElementaryProblemSpec, grids: ChannelGrids, m: int) -> ModeField:
    geo, prm = spec.geometry, spec.params
    k = geo.wavenumbers(spec.n_modes)[m]
    mu, kap, beta = prm.mu, prm.kappa, prm.beta
    gs = {
        "top": sample_field(spec.g_plus, m, grids.top),
        "porous": sample_field(spec.g_minus, m, grids.porous),
        "bottom": sample_field(spec.g_plus, m, grids.bottom),
    }
    if m == 0:
        return _elementary_mode0(spec, grids, gs)
    blocks = {
        "top": VWBlock("top", grids.top, k, mu, 0.0, gs["top"]),
        "porous": DarcyBlock("porous", grids.porous, k, kap, gs["porous"]),
        "bottom": VWBlock("bottom", grids.bottom, k, mu, 0.0, gs["bottom"]),
    }
    rows = []
    for b in blocks.values():
        rows += b.interior_rows() + b.junction_rows()
    for name, where in WALLS:
        b = blocks[name]
        i = b.end(where)
        rows += [b.v(i), b.dv(i)]
    P = blocks["porous"]
    for comp, (fname, fend, pend) in SIDES.items():
        F = blocks[fname]
        i, j = F.end(fend), P.end(pend)
        n2 = geo.n2(comp)
        lt, ln = _tn(spec.l, comp, m, geo)
        hc = spec.h[comp, m]
        rows.append(n2 * (F.v(i) - P.v(j)) - hc)
        rows.append(F.tau(i, n2) - lt)
        rows.append((2 * mu * F.dv(i) - F.p(i)) + P.p(j) - (beta / 2) * n2 * (F.v(i) + P.v(j)) - ln)
    sol, _ = _solve_rows(list(blocks.values()), rows, m)
    return _pack(m, k, {n: b.fields(sol[n]) for n, b in blocks.items()})


def _stokes_mode0_u(geo, grids, mu, gs, gamma_t) -> dict[str, np.ndarray]:
    """Strips at mode 0: -mu u'' = g_x, u = 0 on the wall, mu u' n2 = gamma_t on the interface."""
    blocks = {n: UBlock(n, grids[n], mu, 0.0, gs[n]["gx"]) for n in ("top", "bottom")}
    rows = []
    for b in blocks.values():
        rows += b.interior_rows() + b.junction_rows()
    for name, where in WALLS:
        rows.append(blocks[name].val(blocks[name].end(where)))
    for comp, (fname, fend, _) in SIDES.items():
        F = blocks[fname]
        rows.append(mu * geo.n2(comp) * F.d1(F.end(fend)) - gamma_t[comp])
    sol, _ = _solve_rows(list(blocks.values()), rows, 0)
    return sol


def _strip_pressure(grid: CompositeGrid, gy: np.ndarray, value: complex, at: str) -> np.ndarray:
    G = grid.cumulative_integral(gy)
    return value + G - (G[0] if at == "lo" else G[-1])


def _elementary_mode0(spec: ElementaryProblemSpec, grids: ChannelGrids, gs) -> ModeField:
    geo, prm = spec.geometry, spec.params
    mu, kap, beta = prm.mu, prm.kappa, prm.beta
    lt = [_tn(spec.l, c, 0, geo)[0] for c in (0, 1)]
    ln = [_tn(spec.l, c, 0, geo)[1] for c in (0, 1)]
    u = _stokes_mode0_u(geo, grids, mu, gs, lt)
    V = -spec.h[0, 0]
    gp = grids.porous
    p_minus = gp.cumulative_integral(gs["porous"]["gy"]) - kap * V * (gp.nodes + geo.b)
    p_minus = p_minus - gp.integrate(p_minus) / (gp.hi - gp.lo)
    fields = {
        "porous": dict(u=gs["porous"]["gx"] / kap, du=gs["porous"]["dgx"] / kap,
                       v=np.full(gp.size, V, dtype=complex), dv=np.zeros(gp.size, complex), p=p_minus),
    }
    for comp, (fname, fend, pend) in SIDES.items():
        g = grids[fname]
        pm = p_minus[gp.endpoint_index(pend)]
        p_sigma = pm - (beta / 2) * V * geo.n2(comp) - ln[comp]
        fields[fname] = dict(u=u[fname], du=g.diff(u[fname]), v=np.zeros(g.size, complex),
                             dv=np.zeros(g.size, complex), p=_strip_pressure(g, gs[fname]["gy"], p_sigma, fend))
    return _pack(0, 0.0, fields)


def solve_elementary(spec: ElementaryProblemSpec, grids: ChannelGrids) -> SolutionPair:
    """Monolithic Darcy-Stokes solve; the single pressure constant gives the porous pressure mean zero."""
    _check_grids(spec.geometry, grids)
    spec.check()
    modes = map_modes(lambda m: _elementary_mode(spec, grids, m), range(spec.n_modes + 1))
    sol = SolutionPair(grids, spec.geometry, modes)
    sol.gauge = {"kind": "porous_mean_zero", "porous_mean": porous_mean(sol)}
    sol.info = {"problem": "elementary", "path": "monolithic"}
    return sol


# -- Dirichlet-to-Neumann operator ----------------------------------------


def _neumann_mode(m, k, grid: CompositeGrid, kappa, g, phi, b):
    """Slab pressure with Lap p = div g, dp/dn = g.n - kappa phi; mean zero at mode 0.

    Returns (p, discarded) where discarded is the constant removed from phi at mode 0.
    """
    phi = np.asarray(phi, dtype=complex)
    if m == 0:
        c = 0.5 * (phi[0] + phi[1])
        phi = phi - c
        p = grid.cumulative_integral(g["gy"] - kappa * phi[0])
        p = p - grid.integrate(p) / (grid.hi - grid.lo)
        return p, complex(c)
    blk = DarcyBlock("porous", grid, k, kappa, g)
    rows = blk.interior_rows() + blk.junction_rows()
    # top: Dp = g_y - kappa phi_top;  bottom (n2 = -1): Dp = g_y + kappa phi_bot
    it, ib = blk.end("hi"), blk.end("lo")
    rows.append(blk.d1(it) - (g["gy"][it] - kappa * phi[0]))
    rows.append(blk.d1(ib) - (g["gy"][ib] + kappa * phi[1]))
    sol, _ = _solve_rows([blk], rows, m)
    return sol["porous"], 0j


@dataclass
class DtNOperator:
    """Per-mode affine maps phi (top, bottom) -> porous pressure traces (top, bottom)."""

    geometry: SlabGeometry
    params: PhysicalParams
    grid: CompositeGrid
    g_minus: VolumeField
    matrices: np.ndarray  # (M+1, 2, 2)
    affine: np.ndarray  # (M+1, 2)
    discarded: np.ndarray = field(default=None)

    @property
    def n_modes(self) -> int:
        return self.affine.shape[0] - 1

    def pressure(self, m: int, phi) -> tuple[np.ndarray, complex]:
        k = self.geometry.wavenumbers(self.n_modes)[m]
        g = sample_field(self.g_minus, m, self.grid)
        return _neumann_mode(m, k, self.grid, self.params.kappa, g, phi, self.geometry.b)


def _traces(grid: CompositeGrid, p: np.ndarray) -> np.ndarray:
    return np.array([p[-1], p[0]])


def build_dtn(geometry: SlabGeometry, params: PhysicalParams, g_minus: VolumeField, n_modes: int,
              grid: CompositeGrid) -> DtNOperator:
    M = n_modes
    mats = np.zeros((M + 1, 2, 2), dtype=complex)
    aff = np.zeros((M + 1, 2), dtype=complex)
    op = DtNOperator(geometry, params, grid, g_minus, mats, aff, np.zeros(M + 1, dtype=complex))

    def one(m):
        base, _ = op.pressure(m, [0.0, 0.0])
        a = _traces(grid, base)
        cols = []
        for e in ([1.0, 0.0], [0.0, 1.0]):
            p, _ = op.pressure(m, e)
            cols.append(_traces(grid, p) - a)
        return m, a, np.array(cols).T

    for m, a, T in map_modes(one, range(M + 1)):
        aff[m], mats[m] = a, T
    return op


def dtn_apply(op: DtNOperator, phi: np.ndarray) -> np.ndarray:
    """Pressure traces T(phi) for phi of shape (2, M+1); mode 0 is projected to zero mean first."""
    phi = np.asarray(phi, dtype=complex)
    out = np.zeros_like(op.affine.T)
    for m in range(op.n_modes + 1):
        ph = phi[:, m]
        if m == 0:
            c = 0.5 * (ph[0] + ph[1])
            op.discarded[0] = c
            ph = ph - c
        out[:, m] = op.matrices[m] @ ph + op.affine[m]
    return out


# -- mixed Stokes problem --------------------------------------------------


def _mixed_mode(geo, prm, grids, g_plus, gamma, m, n_modes) -> ModeField:
    """Stokes strips with no-slip walls and prescribed traction sigma n = gamma (Cartesian) on the interface."""
    k = geo.wavenumbers(n_modes)[m]
    mu = prm.mu
    gs = {n: sample_field(g_plus, m, grids[n]) for n in ("top", "bottom")}
    gt = [complex(gamma[c, 0, m]) for c in (0, 1)]
    gn = [complex(gamma[c, 1, m]) * geo.n2(c) for c in (0, 1)]
    if m == 0:
        u = _stokes_mode0_u(geo, grids, mu, gs, gt)
        fields = {}
        for comp, (fname, fend, _) in SIDES.items():
            g = grids[fname]
            fields[fname] = dict(u=u[fname], du=g.diff(u[fname]), v=np.zeros(g.size, complex),
                                 dv=np.zeros(g.size, complex), p=_strip_pressure(g, gs[fname]["gy"], -gn[comp], fend))
        return _pack(0, 0.0, fields)
    blocks = {n: VWBlock(n, grids[n], k, mu, 0.0, gs[n]) for n in ("top", "bottom")}
    rows = []
    for b in blocks.values():
        rows += b.interior_rows() + b.junction_rows()
    for name, where in WALLS:
        b = blocks[name]
        i = b.end(where)
        rows += [b.v(i), b.dv(i)]
    for comp, (fname, fend, _) in SIDES.items():
        F = blocks[fname]
        i = F.end(fend)
        rows.append(F.tau(i, geo.n2(comp)) - gt[comp])
        rows.append(2 * mu * F.dv(i) - F.p(i) - gn[comp])
    sol, _ = _solve_rows(list(blocks.values()), rows, m)
    return _pack(m, k, {n: b.fields(sol[n]) for n, b in blocks.items()})


def solve_mixed_stokes(geometry: SlabGeometry, params: PhysicalParams, g_plus: VolumeField, gamma: np.ndarray,
                       grids: ChannelGrids) -> SolutionPair:
    """Stokes in the fluid strips only; the result has no porous entries."""
    n_modes = gamma.shape[-1] - 1
    modes = map_modes(lambda m: _mixed_mode(geometry, params, grids, g_plus, gamma, m, n_modes), range(n_modes + 1))
    sol = SolutionPair(grids, geometry, modes)
    sol.info = {"problem": "mixed_stokes"}
    return sol


def _normal_trace(mf: ModeField, grids: ChannelGrids, geo: SlabGeometry) -> np.ndarray:
    out = np.zeros(2, dtype=complex)
    for comp, (fname, fend, _) in SIDES.items():
        out[comp] = geo.n2(comp) * mf.v[fname][grids[fname].endpoint_index(fend)]
    return out


def solve_elementary_dtn(spec: ElementaryProblemSpec, grids: ChannelGrids) -> SolutionPair:
    """Elementary problem through the DtN reduction.

    With phi = v+ . n on the interface, the porous pressure trace is T(phi - h) and the
    fluid sees the traction l - T(phi - h) n + (beta/2)(2 phi - h) n.  Per mode, phi
    solves a 2x2 system assembled from unit-load responses of the mixed Stokes problem.
    """
    _check_grids(spec.geometry, grids)
    spec.check()
    geo, prm = spec.geometry, spec.params
    M, beta, kap = spec.n_modes, prm.beta, prm.kappa
    op = build_dtn(geo, prm, spec.g_minus, M, grids.porous)
    zero_g = VolumeField.zero(geo.L, M)

    def one(m):
        k = geo.wavenumbers(M)[m]
        h = spec.h[:, m]
        Tm, am = op.matrices[m], op.affine[m]
        if m == 0:
            phi = np.zeros(2, dtype=complex)
        else:
            lt_only = np.zeros_like(spec.l)
            lt_only[:, 0, m] = spec.l[:, 0, m]
            base = _normal_trace(_mixed_mode(geo, prm, grids, spec.g_plus, lt_only, m, M), grids, geo)
            S = np.zeros((2, 2), dtype=complex)
            for c in (0, 1):
                unit = np.zeros_like(spec.l)
                unit[c, 1, m] = geo.n2(c)  # unit normal traction
                S[:, c] = _normal_trace(_mixed_mode(geo, prm, grids, zero_g, unit, m, M), grids, geo)
            ln = np.array([_tn(spec.l, c, m, geo)[1] for c in (0, 1)])
            c0 = ln + Tm @ h - am - (beta / 2) * h
            A = np.eye(2) - S @ (beta * np.eye(2) - Tm)
            phi = np.linalg.solve(A, base + S @ c0)
        p_minus, _ = _neumann_mode(m, k, grids.porous, kap, sample_field(spec.g_minus, m, grids.porous),
                                   phi - h, geo.b)
        pt = _traces(grids.porous, p_minus)
        gamma = spec.l.copy()
        for c in (0, 1):
            gn = complex(spec.l[c, 1, m]) * geo.n2(c) - pt[c] + (beta / 2) * (2 * phi[c] - h[c])
            gamma[c, 1, m] = gn * geo.n2(c)
        mf = _mixed_mode(geo, prm, grids, spec.g_plus, gamma, m, M)
        gp = grids.porous
        g = sample_field(spec.g_minus, m, gp)
        blk = DarcyBlock("porous", gp, k, kap, g)
        if m == 0:
            V = -h[0]
            por = dict(u=g["gx"] / kap, du=g["dgx"] / kap, v=np.full(gp.size, V, dtype=complex),
                       dv=np.zeros(gp.size, complex), p=p_minus)
        else:
            por = blk.fields(p_minus)
        for q in ("u", "v", "p", "du", "dv"):
            getattr(mf, q)["porous"] = por[q]
        return mf

    modes = map_modes(one, range(M + 1))
    sol = SolutionPair(grids, geo, modes)
    sol.gauge = {"kind": "porous_mean_zero", "porous_mean": porous_mean(sol), "dtn_discarded": complex(op.discarded[0])}
    sol.info = {"problem": "elementary", "path": "dtn"}
    return sol
