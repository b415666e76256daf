"""Manufactured fields and random analytic data.

Each mode m carries a stream function psi_m(y) per subdomain, so that
u = psi', v = -i k psi is divergence free; the pressure profile is free.
Substituting into the equations gives consistent forcing and interface data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .core import (
    SUBDOMAINS,
    ModeField,
    PhysicalParams,
    ProblemData,
    SlabGeometry,
    SolutionPair,
    SympyProfile,
    VolumeField,
    Y,
    interface_zeros,
    synthesize,
)
from .solvers import SIDES, ElementaryProblemSpec


@dataclass(frozen=True)
class ExactMode:
    """Sympy profiles (u, v, p) per subdomain for one Fourier mode."""

    k: float
    u: dict
    v: dict
    p: dict


def _coef(rng: np.random.Generator, m: int, decay: float) -> complex:
    scale = 1.0 / (1.0 + m) ** decay
    if m == 0:
        return float(rng.uniform(0.5, 1.0)) * scale
    return complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) * scale


def _c(z: complex):
    return sp.Float(z.real) + sp.I * sp.Float(z.imag)


def stream_modes(geometry: SlabGeometry, n_modes: int, seed: int = 0, porous_mean_zero: bool = False,
                 normal_flow: bool = True) -> list[ExactMode]:
    """Smooth exact fields with no-slip walls.

    With porous_mean_zero the mode-0 porous pressure integrates to zero over the slab.
    """
    rng = np.random.default_rng(seed)
    a, b, c = geometry.a, geometry.b, geometry.c
    ks = geometry.wavenumbers(n_modes)
    out = []
    for m in range(n_modes + 1):
        k = float(ks[m])
        ct, cp_, cb = (_c(_coef(rng, m, 2.0)) for _ in range(3))
        qt, qp, qb = (_c(_coef(rng, m, 2.0)) for _ in range(3))
        ph = [sp.Float(x) for x in rng.uniform(0, 2, 4)]
        psi = {
            "top": ct * (Y - a) ** 2 * (1 + sp.Rational(3, 10) * Y + sp.Rational(1, 5) * sp.cos(2 * Y + ph[0])),
            "porous": cp_ * (sp.sin(Y + ph[1]) + sp.Rational(1, 2) * Y**2),
            "bottom": cb * (Y + b + c) ** 2 * (1 - sp.Rational(1, 4) * Y + sp.Rational(1, 5) * sp.sin(Y + ph[2])),
        }
        p = {
            "top": qt * sp.cos(Y + ph[3]),
            "porous": qp * sp.cos(sp.pi * Y / b) if porous_mean_zero and m == 0 else qp * (sp.cos(Y) + Y),
            "bottom": qb * sp.exp(Y / 2),
        }
        u = {n: sp.diff(psi[n], Y) for n in SUBDOMAINS}
        if m == 0:
            V = sp.Float(rng.uniform(-0.5, 0.5)) if normal_flow else sp.Integer(0)
            v = {"top": sp.Integer(0), "porous": V, "bottom": sp.Integer(0)}
        else:
            v = {n: -sp.I * k * psi[n] for n in SUBDOMAINS}
        out.append(ExactMode(k, u, v, p))
    return out


def _forcing(em: ExactMode, name: str, nu: float, kappa: float) -> SympyProfile:
    k = em.k
    u, v, p = em.u[name], em.v[name], em.p[name]
    gx = -nu * (sp.diff(u, Y, 2) - k**2 * u) + sp.I * k * p + kappa * u
    gy = -nu * (sp.diff(v, Y, 2) - k**2 * v) + sp.diff(p, Y) + kappa * v
    return SympyProfile([gx, gy])


def _at(expr, y0) -> complex:
    return complex(sp.N(expr.subs(Y, y0)))


def _traces(em: ExactMode, name: str, y0: float, nu: float) -> dict:
    """u, v, p, tangential traction factor (Du + ik v) and Dv at y0."""
    k = em.k
    u, v, p = em.u[name], em.v[name], em.p[name]
    return dict(
        u=_at(u, y0), v=_at(v, y0), p=_at(p, y0),
        shear=nu * _at(sp.diff(u, Y) + sp.I * k * v, y0),
        dv=_at(sp.diff(v, Y), y0),
    )


class Manufactured:
    def __init__(self, geometry: SlabGeometry, params: PhysicalParams, n_modes: int, seed: int = 0,
                 porous_mean_zero: bool = False, normal_flow: bool = True):
        self.geometry = geometry
        self.params = params
        self.n_modes = n_modes
        self.modes = stream_modes(geometry, n_modes, seed, porous_mean_zero, normal_flow)

    def _y(self, comp: int) -> float:
        return self.geometry.interfaces[comp]

    def full_data(self, eps: float) -> ProblemData:
        geo, prm = self.geometry, self.params
        mu, kap, alpha, beta = prm.mu, prm.kappa, prm.alpha, prm.beta
        gp, gm = [], []
        l, h = interface_zeros(self.n_modes), interface_zeros(self.n_modes)
        for m, em in enumerate(self.modes):
            gm.append(_forcing(em, "porous", eps, kap))
            # one profile on the union of strips: each strip sees its own expression
            gp.append(_PiecewiseProfile(geo, _forcing(em, "top", mu, 0.0), _forcing(em, "bottom", mu, 0.0)))
            for comp, (fname, _, _) in SIDES.items():
                y0, n2 = self._y(comp), geo.n2(comp)
                F = _traces(em, fname, y0, mu)
                P = _traces(em, "porous", y0, eps)
                vsum = n2 * (F["v"] + P["v"])
                lt = (F["shear"] - P["shear"]) * n2
                ln = (2 * mu * F["dv"] - F["p"]) - (2 * eps * P["dv"] - P["p"]) - beta / 2 * vsum
                Ht = n2 * F["shear"] - alpha * (F["u"] - P["u"])
                Hn = 2 * mu * F["dv"] - F["p"] - beta / 4 * vsum - n2 * (F["v"] - P["v"]) / eps
                l[comp, :, m] = (lt, ln * n2)
                h[comp, :, m] = (Ht - 0.5 * lt, (Hn - 0.5 * ln) * n2)
        L = geo.L
        return ProblemData(geo, VolumeField(L, tuple(gm)), VolumeField(L, tuple(gp)), _real0(h), _real0(l))

    def elementary_spec(self) -> ElementaryProblemSpec:
        """Darcy in the slab: g- = kappa v + grad p; h is the normal jump, l balances the stress row."""
        geo, prm = self.geometry, self.params
        mu, kap, beta = prm.mu, prm.kappa, prm.beta
        gp, gm = [], []
        l = interface_zeros(self.n_modes)
        h = np.zeros((2, self.n_modes + 1), dtype=complex)
        for m, em in enumerate(self.modes):
            gm.append(_forcing(em, "porous", 0.0, kap))
            gp.append(_PiecewiseProfile(geo, _forcing(em, "top", mu, 0.0), _forcing(em, "bottom", mu, 0.0)))
            for comp, (fname, _, _) in SIDES.items():
                y0, n2 = self._y(comp), geo.n2(comp)
                F = _traces(em, fname, y0, mu)
                P = _traces(em, "porous", y0, 0.0)
                h[comp, m] = n2 * (F["v"] - P["v"])
                lt = F["shear"] * n2
                ln = (2 * mu * F["dv"] - F["p"]) + P["p"] - beta / 2 * n2 * (F["v"] + P["v"])
                l[comp, :, m] = (lt, ln * n2)
        h[:, 0] = h[:, 0].real
        L = geo.L
        return ElementaryProblemSpec(geo, prm, VolumeField(L, tuple(gm)), VolumeField(L, tuple(gp)), _real0(l), h)

    def mixed_data(self) -> tuple[VolumeField, np.ndarray]:
        """Fluid forcing and the interface traction sigma+ n (Cartesian) of the exact strip fields."""
        geo, mu = self.geometry, self.params.mu
        gp = []
        gamma = interface_zeros(self.n_modes)
        for m, em in enumerate(self.modes):
            gp.append(_PiecewiseProfile(geo, _forcing(em, "top", mu, 0.0), _forcing(em, "bottom", mu, 0.0)))
            for comp, (fname, _, _) in SIDES.items():
                n2 = geo.n2(comp)
                F = _traces(em, fname, self._y(comp), mu)
                gamma[comp, :, m] = (F["shear"] * n2, (2 * mu * F["dv"] - F["p"]) * n2)
        return VolumeField(geo.L, tuple(gp)), _real0(gamma)

    def exact_solution(self, grids, names=SUBDOMAINS) -> SolutionPair:
        modes = []
        for m, em in enumerate(self.modes):
            mf = ModeField.zeros(m, em.k, grids, names)
            for n in names:
                y = grids[n].nodes
                for q, expr in (("u", em.u[n]), ("v", em.v[n]), ("p", em.p[n]),
                                ("du", sp.diff(em.u[n], Y)), ("dv", sp.diff(em.v[n], Y))):
                    f = sp.lambdify(Y, expr, "numpy")
                    getattr(mf, q)[n] = np.broadcast_to(np.asarray(f(y), dtype=complex), y.shape).copy()
            modes.append(mf)
        return SolutionPair(grids, self.geometry, modes)


class _PiecewiseProfile:
    """Fluid forcing defined by separate expressions on the top and bottom strips."""

    def __init__(self, geometry: SlabGeometry, top: SympyProfile, bottom: SympyProfile):
        self.geometry, self.top, self.bottom = geometry, top, bottom

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= -self.geometry.b / 2, self.top(y), self.bottom(y))

    def deriv(self, order: int = 1):
        if not hasattr(self, "_d"):
            self._d = {}
        if order not in self._d:
            self._d[order] = _PiecewiseProfile(self.geometry, self.top.deriv(order), self.bottom.deriv(order))
        return self._d[order]


def _real0(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr[..., 0] = arr[..., 0].real
    return arr


def max_nodal_error(sol: SolutionPair, exact: SolutionPair, names=SUBDOMAINS, quantities=("u", "v", "p"),
                    n_x: int | None = None) -> float:
    """Discrete L-infinity error over (x, y) tensor nodes, x uniform with 2M + 2 points."""
    M = sol.n_modes
    nx = n_x or 2 * M + 2
    x = np.arange(nx) * sol.geometry.L / nx
    worst = 0.0
    for n in names:
        for q in quantities:
            a = np.array([getattr(mf, q)[n] for mf in sol.modes]).T  # (ny, M+1)
            b = np.array([getattr(mf, q)[n] for mf in exact.modes]).T
            diff = synthesize(a - b, sol.geometry.L, x)
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def random_data(geometry: SlabGeometry, n_modes: int, seed: int = 0, decay: float = 2.0,
                degree: int = 3) -> ProblemData:
    """Polynomial-in-y forcing and interface data with coefficients decaying in m."""
    rng = np.random.default_rng(seed)
    gm, gp = [], []
    for m in range(n_modes + 1):
        def poly():
            cs = [_c(_coef(rng, m, decay)) for _ in range(degree + 1)]
            return sum(c * Y**i for i, c in enumerate(cs))

        gm.append(SympyProfile([poly(), poly()]))
        gp.append(SympyProfile([poly(), poly()]))
    h, l = interface_zeros(n_modes), interface_zeros(n_modes)
    for m in range(n_modes + 1):
        for arr in (h, l):
            for comp in (0, 1):
                arr[comp, :, m] = [_coef(rng, m, decay) for _ in range(2)]
    return ProblemData(geometry, VolumeField(geometry.L, tuple(gm)), VolumeField(geometry.L, tuple(gp)),
                       _real0(h), _real0(l))
