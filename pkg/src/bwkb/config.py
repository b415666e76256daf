"""Run configuration read from an INI file.

Sections and defaults:

    [geometry]        L = 6.283185307179586, a = 1, b = 1, c = 1
    [params]          kappa = 1, mu = 1, alpha = 1, beta = 1
    [data]            kind = manufactured | analytic | zero | explicit
                      seed = 0, decay = 2, degree = 3, file = (explicit only, JSON)
    [discretization]  n_modes = 8, n_points = 32, fluid_points = (n_points),
                      layer_factor = 8, transition_splits = 4
    [study]           eps_list = 0.1, 0.03, 0.01, 0.003, 0.001
                      order = 4, orders = 2, 3, 4, poincare = 1, outputs = .

``manufactured`` data are stream-function fields whose forcing depends on eps; studies
that need eps-independent data (expand, converge, energy) use the seeded analytic
polynomial data of the same seed instead.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy as sp

from .core import PhysicalParams, ProblemData, SlabGeometry, SympyProfile, VolumeField, Y, make_geometry
from .errors import BwkbError, ConfigurationError

DATA_KINDS = ("manufactured", "analytic", "zero", "explicit")


@dataclass(frozen=True)
class GeometryBlock:
    L: float = 2 * np.pi
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0


@dataclass(frozen=True)
class ParamsBlock:
    kappa: float = 1.0
    mu: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0


@dataclass(frozen=True)
class DataBlock:
    kind: str = "manufactured"
    seed: int = 0
    decay: float = 2.0
    degree: int = 3
    file: str | None = None


@dataclass(frozen=True)
class DiscretizationBlock:
    n_modes: int = 8
    n_points: int = 32
    fluid_points: int | None = None
    layer_factor: float = 8.0
    transition_splits: int = 4

    def grid_kw(self) -> dict:
        return dict(fluid_points=self.fluid_points, layer_factor=self.layer_factor,
                    transition_splits=self.transition_splits)


@dataclass(frozen=True)
class StudyBlock:
    eps_list: tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
    order: int = 4
    orders: tuple[int, ...] = (2, 3, 4)
    poincare: float = 1.0
    outputs: str = "."


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    params: ParamsBlock = field(default_factory=ParamsBlock)
    data: DataBlock = field(default_factory=DataBlock)
    discretization: DiscretizationBlock = field(default_factory=DiscretizationBlock)
    study: StudyBlock = field(default_factory=StudyBlock)

    def make_geometry(self) -> SlabGeometry:
        g = self.geometry
        return make_geometry(g.L, g.a, g.b, g.c)

    def make_params(self, eps: float = 1.0) -> PhysicalParams:
        p = self.params
        return PhysicalParams(p.kappa, p.mu, p.alpha, p.beta, eps)


def parse_float_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())
    except ValueError as exc:
        raise ConfigurationError(f"malformed number list {text!r}") from exc
    if not vals:
        raise ConfigurationError("empty number list")
    return vals


def check_descending(eps_list) -> tuple[float, ...]:
    eps_list = tuple(float(e) for e in eps_list)
    if any(e <= 0 for e in eps_list):
        raise ConfigurationError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigurationError(f"eps list must be strictly descending, got {list(eps_list)}")
    return eps_list


def _get(cp: configparser.ConfigParser, section: str, key: str, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def _expr_float(text: str) -> float:
    """Numbers such as '2*pi' are allowed for lengths."""
    try:
        return float(sp.sympify(text, locals={"pi": sp.pi}))
    except (sp.SympifyError, TypeError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    known = {"geometry", "params", "data", "discretization", "study"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")

    d = GeometryBlock()
    geo = GeometryBlock(*(_get(cp, "geometry", k, _expr_float, getattr(d, k)) for k in ("L", "a", "b", "c")))
    d = ParamsBlock()
    prm = ParamsBlock(*(_get(cp, "params", k, float, getattr(d, k)) for k in ("kappa", "mu", "alpha", "beta")))
    d = DataBlock()
    data = DataBlock(
        kind=_get(cp, "data", "kind", str.strip, d.kind),
        seed=_get(cp, "data", "seed", int, d.seed),
        decay=_get(cp, "data", "decay", float, d.decay),
        degree=_get(cp, "data", "degree", int, d.degree),
        file=_get(cp, "data", "file", str.strip, d.file),
    )
    if data.kind not in DATA_KINDS:
        raise ConfigurationError(f"[data] kind must be one of {DATA_KINDS}, got {data.kind!r}")
    if data.kind == "explicit":
        if not data.file:
            raise ConfigurationError("[data] kind = explicit needs file = PATH")
        fpath = Path(data.file)
        if not fpath.is_absolute():
            fpath = path.parent / fpath
        if not fpath.is_file():
            raise FileNotFoundError(f"data file not found: {fpath}")
        data = DataBlock(data.kind, data.seed, data.decay, data.degree, str(fpath))
    d = DiscretizationBlock()
    disc = DiscretizationBlock(
        n_modes=_get(cp, "discretization", "n_modes", int, d.n_modes),
        n_points=_get(cp, "discretization", "n_points", int, d.n_points),
        fluid_points=_get(cp, "discretization", "fluid_points", int, d.fluid_points),
        layer_factor=_get(cp, "discretization", "layer_factor", float, d.layer_factor),
        transition_splits=_get(cp, "discretization", "transition_splits", int, d.transition_splits),
    )
    d = StudyBlock()
    study = StudyBlock(
        eps_list=_get(cp, "study", "eps_list", parse_float_list, d.eps_list),
        order=_get(cp, "study", "order", int, d.order),
        orders=_get(cp, "study", "orders", lambda t: tuple(int(x) for x in parse_float_list(t)), d.orders),
        poincare=_get(cp, "study", "poincare", float, d.poincare),
        outputs=_get(cp, "study", "outputs", str.strip, d.outputs),
    )
    cfg = RunConfig(geo, prm, data, disc, study)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    try:
        cfg.make_geometry()
        cfg.make_params()
    except BwkbError as exc:
        raise ConfigurationError(str(exc)) from exc
    disc = cfg.discretization
    if disc.n_modes < 0:
        raise ConfigurationError("n_modes must be >= 0")
    if disc.n_points < 8 or (disc.fluid_points is not None and disc.fluid_points < 8):
        raise ConfigurationError("n_points must be >= 8")
    if disc.layer_factor <= 0 or disc.transition_splits < 1:
        raise ConfigurationError("layer_factor must be > 0 and transition_splits >= 1")
    check_descending(cfg.study.eps_list)
    if not 0 <= cfg.study.order <= 6:
        raise ConfigurationError("order must be in [0, 6]")
    if any(k < 2 or k > 6 for k in cfg.study.orders):
        raise ConfigurationError("remainder orders must be in [2, 6]")


# -- data construction ---------------------------------------------------------


def _complex_list(obj, shape) -> np.ndarray:
    arr = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", np.zeros(shape)), dtype=float)
    if arr.shape != shape:
        raise ConfigurationError(f"interface data has shape {arr.shape}, expected {shape}")
    return arr


def load_explicit(path: str | Path, geometry: SlabGeometry, n_modes: int) -> ProblemData:
    """JSON: g_minus/g_plus = per-mode [gx, gy] expressions in y; h, l = {re, im} arrays (2, 2, M+1)."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc

    def field_of(key):
        modes = raw.get(key, [])
        if len(modes) > n_modes + 1:
            raise ConfigurationError(f"{key} has {len(modes)} modes, n_modes = {n_modes}")
        profs = []
        for m in range(n_modes + 1):
            if m < len(modes) and modes[m] is not None:
                try:
                    exprs = [sp.sympify(e, locals={"y": Y, "I": sp.I, "pi": sp.pi}) for e in modes[m]]
                except sp.SympifyError as exc:
                    raise ConfigurationError(f"{key}[{m}]: {exc}") from exc
                if len(exprs) != 2:
                    raise ConfigurationError(f"{key}[{m}] needs two components")
                profs.append(SympyProfile(exprs))
            else:
                profs.append(None)
        return VolumeField(geometry.L, tuple(profs))

    shape = (2, 2, n_modes + 1)
    h = _complex_list(raw["h"], shape) if "h" in raw else np.zeros(shape, complex)
    l = _complex_list(raw["l"], shape) if "l" in raw else np.zeros(shape, complex)
    try:
        return ProblemData(geometry, field_of("g_minus"), field_of("g_plus"), h, l)
    except BwkbError as exc:
        raise ConfigurationError(str(exc)) from exc


def study_data(cfg: RunConfig) -> ProblemData:
    """eps-independent data for expansions and studies."""
    from .manufactured import random_data

    geo, n = cfg.make_geometry(), cfg.discretization.n_modes
    kind = cfg.data.kind
    if kind == "zero":
        return ProblemData.zero(geo, n)
    if kind == "explicit":
        return load_explicit(cfg.data.file, geo, n)
    return random_data(geo, n, cfg.data.seed, cfg.data.decay, cfg.data.degree)


def config_dict(cfg: RunConfig) -> dict:
    from dataclasses import asdict

    return asdict(cfg)
