#!/usr/bin/env python3
"""Side-by-side Lusin optima for a Huber capacity and a sup of measures.

Same indicator function and (eta, scale) schedule for both; the Huber column
stays above its contamination level, the sup column decays with the grid.

    python scripts/resolution_table.py --resolutions 11 101 1001 4001
"""

import argparse
from fractions import Fraction

import numpy as np

from lusincap.capacity import WeightVector, huber_contamination, sup_of_measures
from lusincap.finite_space import build_interval_grid
from lusincap.lusin import LusinInstance, exact_min_removal


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolutions", type=int, nargs="+", default=[11, 101, 1001])
    ap.add_argument("--eps", type=Fraction, default=Fraction(1, 10))
    ap.add_argument("--delta", type=Fraction, default=Fraction(1, 20))
    args = ap.parse_args()
    print(f"{'points':>8} {'huber':>12} {'sup':>12}")
    for r in args.resolutions:
        G = build_interval_grid(r, 0, 1)
        u = np.zeros(r)
        u[0] = 1.0
        row = []
        for cap in (huber_contamination(G, WeightVector.uniform(r), args.eps, args.delta),
                    sup_of_measures(G, [WeightVector.uniform(r), WeightVector.tent(r)])):
            row.append(exact_min_removal(LusinInstance(G, cap, u, 0.5, 2 * G.step)).value)
        print(f"{r:>8} {row[0]:>12.6f} {row[1]:>12.6f}")


if __name__ == "__main__":
    main()
