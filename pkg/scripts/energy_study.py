"""Energy-estimate terms of the full problem over a descending eps grid.

    python scripts/energy_study.py --out results/
"""

import argparse
from pathlib import Path

import numpy as np

from bwkb.core import PhysicalParams, make_geometry
from bwkb.manufactured import random_data
from bwkb.verification import energy_check, energy_to_csv, energy_uniform


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--n-modes", type=int, default=6)
    ap.add_argument("--n-points", type=int, default=32)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--eps-list", default="0.1,0.01,0.001,0.0001")
    ap.add_argument("--out", default=None, help="directory for energy.csv")
    args = ap.parse_args(argv)

    geo = make_geometry(2 * np.pi, 1.0, 1.0, 1.0)
    prm = PhysicalParams(args.kappa, 1.0, 1.0, 1.0)
    data = random_data(geo, args.n_modes, seed=args.seed)
    reps = energy_check(data, geo, prm, [float(e) for e in args.eps_list.split(",")], n_points=args.n_points)
    print(f"{'eps':>8} {'lhs':>12} {'jump_n':>12} {'ratio':>10}")
    for r in reps:
        print(f"{r.eps:8.0e} {r.lhs:12.4e} {r.jump_n:12.4e} {r.ratio:10.4f}")
    ok, worst = energy_uniform(reps)
    print(f"last ratio <= 2 x median: {ok} (max ratio {worst:.4f})")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "energy.csv").write_text(energy_to_csv(reps))


if __name__ == "__main__":
    main()
