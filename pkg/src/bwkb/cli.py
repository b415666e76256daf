"""Command line front end.

Exit codes: 0 success, 1 numerical failure, 2 configuration failure.
BWKB_THREADS caps the number of worker threads used for per-mode and per-eps solves.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, check_descending, load_config, parse_float_list, study_data
from .core import build_channel_grids
from .errors import BwkbError, ConfigurationError, InputError
from .solvers import FullProblemSpec, solve_elementary, solve_full, solve_mixed_stokes
from .verification import (
    MIN_FIT_POINTS,
    compute_norms,
    energy_check,
    energy_to_csv,
    energy_uniform,
    remainder_study,
    reports_to_csv,
    to_json,
)
from .wkb import build_expansion

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2
MMS_TOL = 1e-8


def _cplx(a) -> dict:
    a = np.asarray(a)
    return {"re": np.round(a.real, 15).tolist(), "im": np.round(a.imag, 15).tolist()}


def _write(text: str, out: str | None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _info(msg: str, args):
    # keep stdout clean when it carries the artifact
    print(msg, file=sys.stdout if args.out else sys.stderr)


def _eps_list(args, cfg: RunConfig) -> tuple[float, ...]:
    eps = parse_float_list(args.eps_list) if args.eps_list else cfg.study.eps_list
    return check_descending(eps)


def _grids(cfg: RunConfig, eps=None):
    d = cfg.discretization
    return build_channel_grids(cfg.make_geometry(), d.n_points, eps=eps, kappa=cfg.params.kappa, **d.grid_kw())


def _full_data(cfg: RunConfig, eps: float):
    from .manufactured import Manufactured

    if cfg.data.kind == "manufactured":
        man = Manufactured(cfg.make_geometry(), cfg.make_params(eps), cfg.discretization.n_modes, cfg.data.seed)
        return man.full_data(eps), man
    return study_data(cfg), None


def _norm_summary(sol) -> dict:
    ns = compute_norms(sol)
    return {
        "l2_sq": ns.l2,
        "grad_sq": ns.grad,
        "pressure_sq": ns.pressure,
        "interface_jump_n_sq": ns.jump_n,
        "interface_jump_sq": ns.jump,
        "interface_avg_n_sq": ns.avg_n,
    }


def _solution_json(sol) -> dict:
    out = {"gauge": {k: (v if not isinstance(v, complex) else [v.real, v.imag]) for k, v in sol.gauge.items()},
           "warnings": sol.warnings, "grids": {}, "modes": []}
    for name, g in sol.grids.items():
        out["grids"][name] = np.round(g.nodes, 15).tolist()
    for mf in sol.modes:
        out["modes"].append({"m": mf.m, "k": mf.k,
                             **{q: {n: _cplx(a) for n, a in getattr(mf, q).items()} for q in ("u", "v", "p")}})
    return out


# -- subcommands -------------------------------------------------------------------


def cmd_solve(args, cfg: RunConfig) -> int:
    from .manufactured import max_nodal_error

    eps = args.eps if args.eps is not None else cfg.study.eps_list[0]
    if eps <= 0:
        raise ConfigurationError("eps must be positive")
    data, man = _full_data(cfg, eps)
    grids = _grids(cfg, eps)
    sol = solve_full(FullProblemSpec(cfg.make_geometry(), cfg.make_params(eps), data), grids)
    result = {"command": "solve", "eps": eps, "norms": _norm_summary(sol), "solution": _solution_json(sol)}
    if man is not None:
        result["recovery_error"] = max_nodal_error(sol, man.exact_solution(grids))
    _write(json.dumps(result, sort_keys=True, indent=1), args.out)
    return EXIT_OK


def cmd_expand(args, cfg: RunConfig) -> int:
    J = args.order if args.order is not None else cfg.study.order
    if not 0 <= J <= 6:
        raise ConfigurationError(f"order must be in [0, 6], got {J}")
    data = study_data(cfg)
    bundle = build_expansion(data, cfg.make_geometry(), cfg.make_params(), J, grids=_grids(cfg))
    payload = json.loads(bundle.to_json())
    payload["degree_table"] = bundle.degree_table()
    payload["residuals"] = {str(e.j): e.residuals for e in bundle.orders}
    _write(json.dumps(payload, sort_keys=True, indent=1), args.out)
    worst = max((v for e in bundle.orders for v in e.residuals.values()), default=0.0)
    _info(f"expand: orders 0..{J}, worst interface residual {worst:.3e}", args)
    return EXIT_OK


def cmd_converge(args, cfg: RunConfig) -> int:
    eps = _eps_list(args, cfg)
    if len(eps) < MIN_FIT_POINTS:
        raise ConfigurationError(f"need at least {MIN_FIT_POINTS} eps values, got {len(eps)}")
    orders = (args.order,) if args.order is not None else cfg.study.orders
    if min(orders) < 2:
        raise ConfigurationError("remainder orders must be >= 2")
    data = study_data(cfg)
    reports = remainder_study(data, cfg.make_geometry(), cfg.make_params(), orders, eps,
                              n_points=cfg.discretization.n_points, poincare=cfg.study.poincare,
                              grid_kw=cfg.discretization.grid_kw())
    text = reports_to_csv(reports) if args.format == "csv" else to_json(reports)
    _write(text, args.out)
    failed = False
    for r in reports:
        usable = sum(not p.flagged for p in r.points)
        _info(f"summary k={r.k}: fitted slope {r.fitted_slope:.3f}, theory {r.theory_slope:.3f}, "
              f"usable points {usable}/{len(r.points)}", args)
        if usable < MIN_FIT_POINTS:
            print(f"k={r.k}: only {usable} usable points after flagging", file=sys.stderr)
            failed = True
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_energy(args, cfg: RunConfig) -> int:
    eps = _eps_list(args, cfg)
    data = study_data(cfg)
    reports = energy_check(data, cfg.make_geometry(), cfg.make_params(), eps, n_points=cfg.discretization.n_points,
                           poincare=cfg.study.poincare, grid_kw=cfg.discretization.grid_kw())
    text = energy_to_csv(reports) if args.format == "csv" else to_json(reports)
    _write(text, args.out)
    ok, worst = energy_uniform(reports)
    ratio = "n/a" if worst is None else f"{worst:.4e}"
    _info(f"summary energy: max ratio {ratio}, last <= 2 x median: {ok}", args)
    return EXIT_OK if (worst is None or np.isfinite(worst)) else EXIT_NUMERIC


def cmd_mms(args, cfg: RunConfig) -> int:
    from .manufactured import Manufactured, max_nodal_error

    eps = args.eps if args.eps is not None else 0.1
    geo, n = cfg.make_geometry(), cfg.discretization.n_modes
    seed = cfg.data.seed
    grids = _grids(cfg, eps)
    errors = {}
    man = Manufactured(geo, cfg.make_params(eps), n, seed)
    sol = solve_full(FullProblemSpec(geo, cfg.make_params(eps), man.full_data(eps)), grids)
    errors["full"] = max_nodal_error(sol, man.exact_solution(grids))
    man0 = Manufactured(geo, cfg.make_params(), n, seed, porous_mean_zero=True)
    sol = solve_elementary(man0.elementary_spec(), grids)
    errors["elementary"] = max_nodal_error(sol, man0.exact_solution(grids))
    gp, gamma = man.mixed_data()
    sol = solve_mixed_stokes(geo, cfg.make_params(eps), gp, gamma, grids)
    errors["mixed_stokes"] = max_nodal_error(sol, man.exact_solution(grids, ("top", "bottom")), ("top", "bottom"))
    passed = all(v <= MMS_TOL for v in errors.values())
    _write(json.dumps({"command": "mms", "eps": eps, "errors": errors, "tolerance": MMS_TOL, "passed": passed},
                      sort_keys=True, indent=1), args.out)
    return EXIT_OK if passed else EXIT_NUMERIC


COMMANDS = {"solve": cmd_solve, "expand": cmd_expand, "converge": cmd_converge, "energy": cmd_energy,
            "mms": cmd_mms}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bwkb",
        description="Stokes-Brinkman transmission solver, boundary-layer expansion and verification studies.",
        epilog="Config sections and defaults: see bwkb.config (geometry, params, data, discretization, study).",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "solve the full problem at one eps and write mode coefficients and norms (JSON)",
        "expand": "build the expansion to a given order and write the bundle (JSON)",
        "converge": "remainder study over an eps grid (CSV or JSON) with fitted slopes",
        "energy": "energy-estimate terms over an eps grid (CSV or JSON)",
        "mms": "manufactured-solution recovery errors of the three solvers",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("--config", default=None, help="INI config file (defaults used when omitted)")
        sp.add_argument("--eps", type=float, default=None, help="porous viscosity (solve, mms); default first of eps_list / 0.1")
        sp.add_argument("--eps-list", default=None, help="comma-separated descending eps grid (converge, energy)")
        sp.add_argument("--order", type=int, default=None, help="expansion order J (expand) or remainder order k (converge)")
        sp.add_argument("--out", default=None, help="output file; stdout when omitted")
        sp.add_argument("--format", choices=("csv", "json"), default="csv", help="report format (converge, energy)")
    return p


def _fail(kind: str, exc: BaseException, code: int) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        return COMMANDS[args.command](args, cfg)
    except FileNotFoundError as exc:
        return _fail("missing_file", exc, EXIT_CONFIG)
    except (ConfigurationError, InputError) as exc:
        return _fail(type(exc).__name__, exc, EXIT_CONFIG)
    except BwkbError as exc:
        return _fail(type(exc).__name__, exc, EXIT_NUMERIC)


if __name__ == "__main__":
    sys.exit(main())
