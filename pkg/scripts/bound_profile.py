"""Profile the tail bound family across x for one carrier.

Shows which member of the family wins where: the optimized moment
bound, the two hull bounds, the exponential bound, and (for p >= 1/2)
the normal domination term.

Usage: python3 scripts/bound_profile.py --p 0.3 --n 8 [--m auto] [--count 40]
"""
import argparse
import math

import numpy as np

from asymtail.bounds import combined_bound_grid
from asymtail.thresholds import m_star


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--m", default="auto", help="moment index or 'auto' for m_star(p)")
    ap.add_argument("--count", type=int, default=40)
    args = ap.parse_args()

    m = m_star(args.p) if args.m == "auto" else float(args.m)
    top = args.n * math.sqrt((1 - args.p) / args.p)
    xs = np.linspace(0.0, top, args.count)
    reports = combined_bound_grid(args.p, m, xs, n=args.n, s_m=1.0)

    print(f"p={args.p} m={m:.6f} n={args.n} (carrier top {top:.3f})")
    print(f"{'x':>8s} {'b_opt':>12s} {'lin_lc':>12s} {'lc':>12s} "
          f"{'hoeffding':>12s} {'argmin':>10s}")
    for r in reports:
        print(f"{r.x:8.3f} {r.b_opt:12.5e} {r.lin_lc:12.5e} {r.lc:12.5e} "
              f"{r.hoeffding:12.5e} {r.argmin:>10s}")

    wins = {}
    for r in reports:
        wins[r.argmin] = wins.get(r.argmin, 0) + 1
    print("wins:", ", ".join(f"{k}={v}" for k, v in sorted(wins.items())))


if __name__ == "__main__":
    main()
