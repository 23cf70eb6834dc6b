#!/usr/bin/env python3
"""Randomized search for a sup of two measures that is not 2-alternating.

Weights are small-denominator fractions, so every excess is exact.  Prints
the first violation found on n points (default 4), or reports none.

    python scripts/search_sup_violation.py --n 4 --trials 20000 --seed 0
"""

import argparse
from fractions import Fraction

import numpy as np


def random_measure(rng, n, den):
    cuts = sorted(int(c) for c in rng.integers(0, den + 1, size=n - 1))
    parts = np.diff([0, *cuts, den])
    return [Fraction(int(p), den) for p in parts]


def sup_value(mus, A):
    return max(sum(mu[i] for i in range(len(mu)) if A >> i & 1) for mu in mus)


def search(n, trials, seed, dens=(6, 8, 12, 24)):
    rng = np.random.default_rng(seed)
    full = 1 << n
    for t in range(trials):
        den = dens[t % len(dens)]
        mus = [random_measure(rng, n, den) for _ in range(2)]
        table = [sup_value(mus, A) for A in range(full)]
        for A in range(full):
            for B in range(A + 1, full):
                excess = table[A | B] + table[A & B] - table[A] - table[B]
                if excess > 0:
                    return t, mus, A, B, excess
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    hit = search(args.n, args.trials, args.seed)
    if hit is None:
        print(f"no violation on {args.n} points in {args.trials} trials")
        return
    t, mus, A, B, excess = hit
    print(f"trial {t}: A={A:#0{args.n + 2}b} B={B:#0{args.n + 2}b} excess={excess}")
    for k, mu in enumerate(mus, 1):
        print(f"  mu{k} = ({', '.join(str(x) for x in mu)})")


if __name__ == "__main__":
    main()
