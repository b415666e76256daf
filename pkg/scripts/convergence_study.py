"""Remainder convergence study: fitted slopes for k = 2, 3, 4 and the order-0 L2 rate.

    python scripts/convergence_study.py --out results/
"""

import argparse
from pathlib import Path

import numpy as np

from bwkb.core import PhysicalParams, build_channel_grids, make_geometry
from bwkb.manufactured import random_data
from bwkb.verification import defect_scaling, remainder_study, reports_to_csv
from bwkb.wkb import build_expansion


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappa", type=float, default=4.0)
    ap.add_argument("--b", type=float, default=4.0, help="slab thickness")
    ap.add_argument("--n-modes", type=int, default=6)
    ap.add_argument("--n-points", type=int, default=32)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--eps-list", default="0.1,0.03,0.01,0.003,0.001")
    ap.add_argument("--out", default=None, help="directory for remainder.csv")
    args = ap.parse_args(argv)

    eps = [float(e) for e in args.eps_list.split(",")]
    geo = make_geometry(2 * np.pi, 1.0, args.b, 1.0)
    prm = PhysicalParams(args.kappa, 1.0, 1.0, 1.0)
    data = random_data(geo, args.n_modes, seed=args.seed)
    bundle = build_expansion(data, geo, prm, 4, grids=build_channel_grids(geo, args.n_points))
    reports = remainder_study(data, geo, prm, [2, 3, 4], eps, n_points=args.n_points, bundle=bundle)

    print(f"{'eps':>8} " + " ".join(f"{'k=' + str(r.k):>12}" for r in reports) + f" {'order0 L2':>12}")
    for i, e in enumerate(eps):
        row = " ".join(f"{r.points[i].combined:12.4e}" for r in reports)
        print(f"{e:8.0e} {row} {reports[0].leading_l2[i]:12.4e}")
    for r in reports:
        print(f"k={r.k}: fitted slope {r.fitted_slope:.3f}, required >= {r.theory_slope - 0.2:.2f}")
    print(f"order-0 L2 slope {reports[0].leading_slope:.3f}, required >= 0.25")
    for k in (2, 3, 4):
        _, slope, pred = defect_scaling(bundle, k, eps, n_points=args.n_points)
        print(f"divergence defect k={k}: exponent {slope:.3f}, predicted {pred:.2f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "remainder.csv").write_text(reports_to_csv(reports))


if __name__ == "__main__":
    main()
