"""Independent oracles and instance generators shared by the test modules."""

from fractions import Fraction

import numpy as np

from lusincap.capacity import (
    WeightVector,
    huber_contamination,
    measure_from_weights,
    restrict_normalize,
    sup_of_measures,
)
from lusincap.finite_space import build_interval_grid, space_from_points
from lusincap.lusin import LusinInstance


def brute_within(space, A, delta, strict):
    """Points within (strict or not) ``delta`` of ``A`` by direct pairwise distances."""
    out = 0
    for x in range(space.n):
        for y in range(space.n):
            if A >> y & 1:
                d = space.dist(x, y)
                if (d < delta) if strict else (d <= delta):
                    out |= 1 << x
                    break
    return out


def brute_huber(space, weights, eps, delta, A):
    """Huber value from coordinates and Fractions only."""
    if A == 0:
        return Fraction(0)
    xs = space.coords
    nb = [x for x in range(space.n)
          if any(A >> y & 1 and abs(xs[x] - xs[y]) <= delta for y in range(space.n))]
    return min(sum(weights[i] for i in nb) + eps, Fraction(1))


def brute_mobius(table, n):
    out = []
    for S in range(1 << n):
        total = 0.0
        T = S
        while True:
            total += (-1) ** bin(S ^ T).count("1") * table[T]
            if T == 0:
                break
            T = (T - 1) & S
        out.append(total)
    return np.array(out)


def random_capacity(space, rng, kind=None):
    n = space.n
    kinds = ["measure", "measure-float", "huber", "sup", "restricted"]
    kind = kind or kinds[int(rng.integers(len(kinds)))]
    if kind == "measure":
        return measure_from_weights(space, WeightVector.random(n, rng, scale=int(rng.integers(1, 6))))
    if kind == "measure-float":
        return measure_from_weights(space, WeightVector.random(n, rng, exact=False))
    if kind == "huber":
        eps = Fraction(int(rng.integers(0, 4)), 10)
        delta = space.min_positive_distance() * Fraction(int(rng.integers(1, 7)), 2)
        return huber_contamination(space, WeightVector.random(n, rng, scale=3), eps, delta)
    if kind == "sup":
        m = int(rng.integers(1, 4))
        return sup_of_measures(space, [WeightVector.random(n, rng, scale=4) for _ in range(m)])
    base = random_capacity(space, rng, "huber")
    O = int(rng.integers(0, 1 << n)) & ~1  # keep point 0 outside O so v(X - O) > 0
    return restrict_normalize(base, O)


def random_space(rng, n):
    if rng.random() < 0.6:
        return build_interval_grid(n, 0, 1)
    pts = sorted(set(int(x) for x in rng.choice(4 * n, size=n, replace=False)))
    return space_from_points([Fraction(p, 2 * n) for p in pts])


def random_instance(rng, n_min=4, n_max=15):
    n = int(rng.integers(n_min, n_max + 1))
    space = random_space(rng, n)
    cap = random_capacity(space, rng)
    if rng.random() < 0.5:
        u = rng.integers(0, 4, size=n).astype(float)
    else:
        u = np.round(rng.random(n), 2)
    eta = float([0, 0.25, 0.5, 1.0][int(rng.integers(4))])
    scale = space.min_positive_distance() * Fraction(int(rng.integers(1, 8)), 2)
    return LusinInstance(space, cap, u, eta, scale)
