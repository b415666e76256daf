"""Domain types: slab geometry, physical parameters, Fourier data and per-mode solutions.

Layout (2D, x periodic with period L)::

    y = a          wall (Gamma)
    fluid "top"    Omega_+
    y = 0          interface 0, n = (0, +1)
    porous         Omega_-
    y = -b         interface 1, n = (0, -1)
    fluid "bottom" Omega_+
    y = -b - c     wall (Gamma)

The normal n is the outward normal of the porous slab.  Real fields are
stored through their modes m = 0..M only; mode -m is the conjugate of mode m.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .errors import ConfigurationError, DomainError
from .spectral import CompositeGrid, composite_grid

SUBDOMAINS = ("top", "porous", "bottom")
INTERFACES = (0, 1)


@dataclass(frozen=True)
class SlabGeometry:
    L: float
    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("L", "a", "b", "c"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigurationError(f"geometry: {name} must be > 0, got {val}")

    @property
    def interfaces(self) -> tuple[float, float]:
        return (0.0, -self.b)

    @property
    def walls(self) -> tuple[float, float]:
        return (self.a, -self.b - self.c)

    def n2(self, comp: int) -> float:
        """y-component of the unit normal on interface component `comp`."""
        return 1.0 if comp == 0 else -1.0

    def normal(self, comp: int) -> np.ndarray:
        return np.array([0.0, self.n2(comp)])

    def wavenumbers(self, n_modes: int) -> np.ndarray:
        return 2.0 * np.pi * np.arange(n_modes + 1) / self.L

    def subdomain_of(self, y: float) -> str:
        a, b, c = self.a, self.b, self.c
        if 0.0 < y <= a:
            return "top"
        if -b <= y <= 0.0:
            return "porous"
        if -b - c <= y < -b:
            return "bottom"
        raise DomainError(f"y = {y} lies outside the channel [{-b - c}, {a}]")

    def chart_distance(self, comp: int, y):
        """Distance to interface component `comp` (its own chart: -y or y + b)."""
        y = np.asarray(y, dtype=float)
        return -y if comp == 0 else y + self.b

    def distance(self, y):
        """Euclidean distance to the interface set, for points of the porous slab."""
        y = np.asarray(y, dtype=float)
        if np.any(y > 0.0) or np.any(y < -self.b):
            raise DomainError("distance to the interface is only defined inside the porous slab")
        return np.minimum(-y, y + self.b)

    def nearest_component(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(-y <= y + self.b, 0, 1)

    def grad_d(self, y) -> np.ndarray:
        """Gradient of d; equals -n of the nearest interface component."""
        comp = self.nearest_component(y)
        return np.stack([np.zeros_like(comp, dtype=float), np.where(comp == 0, -1.0, 1.0)], axis=0)

    def lap_d(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))


def make_geometry(L: float, a: float, b: float, c: float) -> SlabGeometry:
    return SlabGeometry(float(L), float(a), float(b), float(c))


@dataclass(frozen=True)
class PhysicalParams:
    kappa: float
    mu: float
    alpha: float
    beta: float
    eps: float = 1.0

    def __post_init__(self):
        for name in ("kappa", "mu", "alpha", "beta", "eps"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigurationError(f"params: {name} must be > 0, got {val}")

    def with_eps(self, eps: float) -> "PhysicalParams":
        return PhysicalParams(self.kappa, self.mu, self.alpha, self.beta, float(eps))

    def M(self, xi, n) -> np.ndarray:
        xi, n = np.asarray(xi), np.asarray(n)
        return self.beta * np.dot(xi, n) * n

    def S(self, xi, n) -> np.ndarray:
        xi, n = np.asarray(xi), np.asarray(n)
        xn = np.dot(n, xi)
        return xn * n / self.eps + self.alpha * (xi - xn * n)


Profile = Callable[[np.ndarray], np.ndarray]

Y = sp.Symbol("y", real=True)


class SympyProfile:
    """Vector y-profile given by two sympy expressions in `Y`; derivatives are exact."""

    def __init__(self, exprs):
        self.exprs = tuple(sp.sympify(e) for e in exprs)
        if len(self.exprs) != 2:
            raise ConfigurationError("a vector profile needs exactly two components")
        self._fn = sp.lambdify(Y, list(self.exprs), "numpy")
        self._derivs: dict[int, SympyProfile] = {}

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.array([np.broadcast_to(np.asarray(v, dtype=complex), y.shape) for v in self._fn(y)])

    def deriv(self, order: int = 1) -> "SympyProfile":
        if order not in self._derivs:
            self._derivs[order] = SympyProfile([sp.diff(e, Y, order) for e in self.exprs])
        return self._derivs[order]

    def __repr__(self):
        return f"SympyProfile({self.exprs[0]}, {self.exprs[1]})"


def darcy_laplacian(profile: SympyProfile | None, k: float, kappa: float) -> SympyProfile | None:
    """Profile of (Lap - grad div) g / kappa for one mode: the Laplacian of the Darcy velocity."""
    if profile is None:
        return None
    gx, gy = profile.exprs
    ik = sp.I * float(k)
    ex = sp.diff(gx, Y, 2) - ik * sp.diff(gy, Y)
    ey = -float(k) ** 2 * gy - ik * sp.diff(gx, Y)
    return SympyProfile([ex / kappa, ey / kappa])



@dataclass(frozen=True)
class VolumeField:
    """Vector field sum_m f_m(y) e^{i k_m x}; profiles[m] maps y (n,) -> (2, n) complex, None = zero."""

    L: float
    profiles: tuple[Profile | None, ...]

    @property
    def n_modes(self) -> int:
        return len(self.profiles) - 1

    def mode(self, m: int, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if m >= len(self.profiles) or self.profiles[m] is None:
            return np.zeros((2, y.size), dtype=complex)
        return np.asarray(self.profiles[m](y), dtype=complex).reshape(2, y.size)

    def evaluate(self, x: float, y: float) -> np.ndarray:
        out = np.zeros(2, dtype=complex)
        for m in range(len(self.profiles)):
            fm = self.mode(m, [y])[:, 0]
            k = 2.0 * np.pi * m / self.L
            out += fm * np.exp(1j * k * x) if m == 0 else 2.0 * (fm * np.exp(1j * k * x)).real
        return out

    @staticmethod
    def zero(L: float, n_modes: int) -> "VolumeField":
        return VolumeField(L, (None,) * (n_modes + 1))


def interface_zeros(n_modes: int) -> np.ndarray:
    """Interface data array: axis 0 component (top, bottom), axis 1 Cartesian (x, y), axis 2 mode."""
    return np.zeros((2, 2, n_modes + 1), dtype=complex)


@dataclass(frozen=True)
class ProblemData:
    geometry: SlabGeometry
    g_minus: VolumeField
    g_plus: VolumeField
    h: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        M = self.n_modes
        for name in ("h", "l"):
            arr = getattr(self, name)
            if arr.shape != (2, 2, M + 1):
                raise ConfigurationError(f"{name} must have shape (2, 2, {M + 1}), got {arr.shape}")
            if np.any(np.abs(arr[:, :, 0].imag) > 1e-12 * (1 + np.abs(arr).max())):
                raise ConfigurationError(f"{name}: mode 0 of a real field must be real")

    @property
    def n_modes(self) -> int:
        return self.h.shape[-1] - 1

    @staticmethod
    def zero(geometry: SlabGeometry, n_modes: int) -> "ProblemData":
        z = VolumeField.zero(geometry.L, n_modes)
        return ProblemData(geometry, z, z, interface_zeros(n_modes), interface_zeros(n_modes))

    def is_zero(self) -> bool:
        return (
            all(p is None for p in self.g_minus.profiles)
            and all(p is None for p in self.g_plus.profiles)
            and not np.any(self.h)
            and not np.any(self.l)
        )


def evaluate_field(field_data, point, geometry: SlabGeometry | None = None) -> np.ndarray:
    """Sum the Fourier series of a volume field or of one interface component at a point.

    For a VolumeField, `point` is (x, y).  For interface data (shape (2, 2, M+1) or
    (2, M+1)) `point` is (x, comp).
    """
    x = float(point[0])
    if isinstance(field_data, VolumeField):
        y = float(point[1])
        if geometry is not None:
            geometry.subdomain_of(y)
        return field_data.evaluate(x, y)
    arr = np.asarray(field_data)
    comp = int(point[1])
    if comp not in INTERFACES:
        raise DomainError(f"interface component must be 0 or 1, got {comp}")
    coeffs = arr[comp]
    M = coeffs.shape[-1] - 1
    L = geometry.L if geometry is not None else 2.0 * np.pi
    k = 2.0 * np.pi * np.arange(M + 1) / L
    phase = np.exp(1j * k * x)
    return (coeffs[..., 0] + 2.0 * (coeffs[..., 1:] * phase[1:]).real.sum(axis=-1)).real


def synthesize(coeffs: np.ndarray, L: float, x: np.ndarray) -> np.ndarray:
    """Real field values on points x from modes 0..M along the last axis."""
    M = coeffs.shape[-1] - 1
    k = 2.0 * np.pi * np.arange(M + 1) / L
    phase = np.exp(1j * np.multiply.outer(x, k))
    full = coeffs[..., None, 0].real + 2.0 * (coeffs[..., None, 1:] * phase[..., 1:]).real.sum(axis=-1)
    return full


@dataclass(frozen=True)
class ChannelGrids:
    top: CompositeGrid
    porous: CompositeGrid
    bottom: CompositeGrid

    def __getitem__(self, name: str) -> CompositeGrid:
        return getattr(self, name)

    def items(self):
        return ((name, self[name]) for name in SUBDOMAINS)

    @property
    def n_points(self) -> int:
        return self.top.elements[0].n

    def signature(self) -> tuple:
        return tuple((name, tuple((e.lo, e.hi, e.n) for e in g.elements)) for name, g in self.items())


def porous_breaks(geometry: SlabGeometry, eps: float | None = None, kappa: float = 1.0,
                  layer_factor: float = 8.0, transition_splits: int = 4) -> list[float]:
    """Element breakpoints for the porous slab.

    Always split at the cutoff transition d in [b/4, 3b/8] of each interface, cut into
    transition_splits equal elements (the cutoff derivatives are steep there); when eps
    is given, add geometrically graded layer elements starting at
    layer_factor * sqrt(eps / kappa) from each interface while they stay below b/8.
    """
    b = geometry.b
    ds = list(np.linspace(b / 4.0, 3.0 * b / 8.0, transition_splits + 1))
    if eps is not None:
        width = layer_factor * np.sqrt(eps / kappa)
        while width < b / 8.0:
            ds.append(width)
            width *= 4.0
    breaks = {0.0, -b, -b / 2.0}
    for d in ds:
        breaks.add(-d)
        breaks.add(-b + d)
    return sorted(breaks)


def build_channel_grids(geometry: SlabGeometry, n_points: int, eps: float | None = None,
                        kappa: float = 1.0, fluid_points: int | None = None, layer_factor: float = 8.0,
                        transition_splits: int = 4) -> ChannelGrids:
    nf = fluid_points or n_points
    top = composite_grid([0.0, geometry.a], nf)
    bottom = composite_grid([-geometry.b - geometry.c, -geometry.b], nf)
    porous = composite_grid(porous_breaks(geometry, eps, kappa, layer_factor, transition_splits), n_points)
    return ChannelGrids(top, porous, bottom)


@dataclass
class ModeField:
    """Cross-channel profiles of one Fourier mode: u, v, p and the y-derivatives du, dv."""

    m: int
    k: float
    u: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    p: dict[str, np.ndarray]
    du: dict[str, np.ndarray]
    dv: dict[str, np.ndarray]

    @staticmethod
    def zeros(m: int, k: float, grids: ChannelGrids, names: Sequence[str] = SUBDOMAINS) -> "ModeField":
        def z():
            return {n: np.zeros(grids[n].size, dtype=complex) for n in names}

        return ModeField(m, k, z(), z(), z(), z(), z())

    def copy(self) -> "ModeField":
        def cp(d):
            return {n: a.copy() for n, a in d.items()}

        return ModeField(self.m, self.k, cp(self.u), cp(self.v), cp(self.p), cp(self.du), cp(self.dv))

    def combine(self, other: "ModeField", a: complex = 1.0, b: complex = 1.0) -> "ModeField":
        def lin(d1, d2):
            return {n: a * d1[n] + b * d2[n] for n in d1}

        return ModeField(self.m, self.k, lin(self.u, other.u), lin(self.v, other.v), lin(self.p, other.p),
                         lin(self.du, other.du), lin(self.dv, other.dv))

    def subdomains(self) -> tuple[str, ...]:
        return tuple(self.u)


@dataclass
class SolutionPair:
    grids: ChannelGrids
    geometry: SlabGeometry
    modes: list[ModeField]
    gauge: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def n_modes(self) -> int:
        return len(self.modes) - 1

    def trace(self, quantity: str, name: str, where: str) -> np.ndarray:
        """Mode coefficients of u, v, p, du or dv at an end ('lo'/'hi') of a subdomain."""
        idx = self.grids[name].endpoint_index(where)
        return np.array([getattr(mf, quantity)[name][idx] for mf in self.modes])

    def evaluate(self, x: float, y: float) -> tuple[np.ndarray, float]:
        """Velocity and pressure at a point, by barycentric interpolation within its element."""
        name = self.geometry.subdomain_of(y)
        g = self.grids[name]
        vals = np.zeros(3, dtype=complex)
        for e, s in zip(g.elements, g.slices()):
            if e.lo - 1e-14 <= y <= e.hi + 1e-14:
                for mf in self.modes:
                    loc = np.array([e.interpolate(getattr(mf, q)[name][s], [y])[0] for q in "uvp"])
                    ph = np.exp(1j * mf.k * x)
                    vals += loc * ph if mf.m == 0 else 2.0 * (loc * ph).real
                break
        return vals[:2].real, float(vals[2].real)


def resample(sol: SolutionPair, grids: ChannelGrids) -> SolutionPair:
    """Interpolate every mode profile onto other grids with the same subdomain extents."""
    names = sol.modes[0].subdomains()
    modes = []
    for mf in sol.modes:
        new = ModeField.zeros(mf.m, mf.k, grids, names)
        for name in names:
            src, dst = sol.grids[name], grids[name].nodes
            for q in ("u", "v", "p", "du", "dv"):
                vals = getattr(mf, q)[name]
                out = np.empty(dst.size, dtype=complex)
                for e, s in zip(src.elements, src.slices()):
                    mask = (dst >= e.lo - 1e-13) & (dst <= e.hi + 1e-13)
                    out[mask] = e.interpolate(vals[s], dst[mask])
                getattr(new, q)[name] = out
        modes.append(new)
    return SolutionPair(grids, sol.geometry, modes, dict(sol.gauge), list(sol.warnings), dict(sol.info))
