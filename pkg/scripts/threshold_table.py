"""Print the moment-index threshold table over a p grid.

Usage: python3 scripts/threshold_table.py [--lo 0.02] [--hi 0.5] [--count 25] [--csv out.csv]
"""
import argparse
import csv

import numpy as np

from asymtail.thresholds import THRESHOLD_COLUMNS, threshold_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lo", type=float, default=0.02)
    ap.add_argument("--hi", type=float, default=0.5)
    ap.add_argument("--count", type=int, default=25)
    ap.add_argument("--csv")
    args = ap.parse_args()

    rows = threshold_table(np.linspace(args.lo, args.hi, args.count))
    header = "".join(f"{c:>12s}" for c in THRESHOLD_COLUMNS)
    print(header)
    for row in rows:
        cells = []
        for c in THRESHOLD_COLUMNS:
            v = row[c]
            cells.append(f"{v:12.6f}" if v is not None else " " * 11 + "-")
        print("".join(cells))

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(THRESHOLD_COLUMNS))
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
