"""The core of a capacity: membership tests and greedy chain measures."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .axioms import check_two_alternating
from .capacity import TOL, Capacity, DenseSetFunction, WeightVector, additive_table, dense_table
from .errors import InvalidArgument, SizeCapError
from .finite_space import Mask, check_mask, full_mask

CORE_TOL = 1e-9
CORE_DENSE_MAX_N = 12
MEMBERSHIP_EXHAUSTIVE_MAX_N = 20


@dataclass
class CoreQueryResult:
    nonempty: bool
    witness: Optional[WeightVector] = None
    binding: list[Mask] = field(default_factory=list)
    method: str = ""
    # optimal value of max sum(nu) over the sub-core polytope (nonempty iff >= 1)
    bound: Optional[float] = None

    def to_json(self) -> dict:
        wit = None
        if self.witness is not None:
            wit = [f"{float(x):.15g}" for x in self.witness.values]
        return {
            "nonempty": self.nonempty,
            "witness": wit,
            "binding": [hex(m) for m in self.binding],
            "method": self.method,
            "bound": None if self.bound is None else f"{self.bound:.15g}",
        }


def core_membership(capacity: Capacity, nu, mode: str = "exhaustive", seed: int = 0,
                    trials: int = 100_000, tol: float = TOL) -> tuple[bool, Optional[Mask]]:
    """Check ``nu(A) <= v(A) + tol`` on all masks (or sampled ones).

    Returns ``(True, None)`` or ``(False, first violating mask)``.  A
    precomputed :class:`DenseSetFunction` may stand in for the capacity when
    many vectors are checked against the same table.
    """
    if not isinstance(nu, WeightVector):
        nu = WeightVector(nu)
    n = capacity.n
    if len(nu) != n:
        raise InvalidArgument("weight vector length does not match the capacity")
    if mode == "exhaustive":
        if n > MEMBERSHIP_EXHAUSTIVE_MAX_N:
            raise SizeCapError(f"exhaustive membership capped at n = {MEMBERSHIP_EXHAUSTIVE_MAX_N}")
        masses = additive_table(nu.values)
        v = capacity.table if isinstance(capacity, DenseSetFunction) else dense_table(capacity).table
        bad = np.nonzero(masses - v > tol)[0]
        return (True, None) if len(bad) == 0 else (False, int(bad[0]))
    if mode != "sampled":
        raise InvalidArgument(f"unknown mode {mode!r}")
    if isinstance(capacity, DenseSetFunction):
        capacity = capacity.__getitem__
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        members = rng.random(n) < 0.5
        mask = int(sum(1 << int(i) for i in np.nonzero(members)[0]))
        if float(nu.values[members].sum()) - capacity(mask) > tol:
            return False, mask
    return True, None


def greedy_chain_measure(capacity: Capacity, ordering: Sequence[int]) -> WeightVector:
    """Increments of ``v`` along the chain of initial segments of ``ordering``."""
    n = capacity.n
    ordering = [int(i) for i in ordering]
    if sorted(ordering) != list(range(n)):
        raise InvalidArgument("ordering must be a permutation of the points")
    weights = [None] * n
    prev_mask = 0
    prev_val = capacity.raw(0)
    for i in ordering:
        cur_mask = prev_mask | (1 << i)
        cur_val = capacity.raw(cur_mask)
        weights[i] = cur_val - prev_val
        prev_mask, prev_val = cur_mask, cur_val
    if not capacity.exact:
        weights = [max(float(w), 0.0) if abs(w) <= TOL else float(w) for w in weights]
    return WeightVector(weights)


def _binding(capacity: Capacity, nu: WeightVector) -> list[Mask]:
    masses = additive_table(nu.values)
    v = dense_table(capacity).table
    return [int(m) for m in np.nonzero(np.abs(masses - v) <= CORE_TOL)[0] if m]


def core_nonempty(capacity: Capacity, assume_two_alternating: Optional[bool] = None) -> CoreQueryResult:
    """Decide whether some probability vector is dominated by ``v`` on every set.

    Two-alternating capacities get the identity-order greedy measure.  Other
    tables go through the linear program ``max sum(nu)`` subject to
    ``nu >= 0`` and ``nu(A) <= v(A)``; the feasible region is closed under
    shrinking coordinates, so the core is nonempty iff the optimum reaches 1.
    """
    n = capacity.n
    if n > CORE_DENSE_MAX_N:
        raise SizeCapError(f"core_nonempty is capped at n = {CORE_DENSE_MAX_N}")
    dense = dense_table(capacity)
    if assume_two_alternating is None:
        assume_two_alternating = check_two_alternating(dense, trials=200_000).holds
    if assume_two_alternating:
        nu = greedy_chain_measure(capacity, range(n))
        ok, _ = core_membership(capacity, nu, tol=CORE_TOL)
        if ok:
            return CoreQueryResult(True, nu, _binding(capacity, nu), "greedy", 1.0)

    size = 1 << n
    masks = np.arange(1, size)
    A_ub = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    b_ub = dense.table[1:]
    res = linprog(-np.ones(n), A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        raise RuntimeError(f"core LP failed: {res.message}")
    best = float(-res.fun)
    if best < 1.0 - CORE_TOL:
        return CoreQueryResult(False, None, [], "lp", best)
    x = np.clip(res.x, 0.0, None)
    x = x / x.sum()
    x[np.argmax(x)] += 1.0 - float(np.sum(x))
    nu = WeightVector(x)
    ok, _ = core_membership(capacity, nu, tol=CORE_TOL)
    if not ok:
        raise RuntimeError("LP witness failed the membership re-check")
    return CoreQueryResult(True, nu, _binding(capacity, nu), "lp", best)


def core_exactness_gap(capacity: Capacity, A: Mask) -> float:
    """``v(A) - nu_A(A)`` for the greedy measure that lists A's points first."""
    n = capacity.n
    check_mask(A, n)
    inside = [i for i in range(n) if A >> i & 1]
    outside = [i for i in range(n) if not A >> i & 1]
    nu = greedy_chain_measure(capacity, inside + outside)
    if nu.exact:
        return float(capacity.raw(A) - sum(nu.fractions[i] for i in inside))
    return capacity(A) - float(sum(nu.values[i] for i in inside))
