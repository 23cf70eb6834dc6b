"""Lusin sets at grid scale.

On a finite trace every function is continuous, so continuity of ``u`` on
``K`` is replaced by an oscillation modulus: points of ``K`` closer than
``scale`` may not differ in ``u`` by more than ``eta``.  A set ``K`` is
feasible iff its complement covers every edge of the conflict graph, and
the solvers minimize ``v(X - K)`` over feasible ``K``.

Ties between removed sets of equal value are broken by the smaller removed
mask read as a binary integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .axioms import regularity_probe
from .capacity import Capacity
from .errors import ConstructionInfeasible, InvalidArgument, SearchCapExceeded, SizeCapError
from .finite_space import FiniteMetricSpace, Mask, as_rational, indices_of

EXACT_MAX_CONFLICT_VERTICES = 30
ORACLE_MAX_N = 15


@dataclass
class LusinInstance:
    space: FiniteMetricSpace
    capacity: Capacity
    u: np.ndarray
    eta: float
    scale: Fraction

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.space.n,):
            raise InvalidArgument(f"u has shape {self.u.shape}, expected ({self.space.n},)")
        if self.capacity.space is not self.space and self.capacity.n != self.space.n:
            raise InvalidArgument("capacity lives on a different space")
        self.scale = as_rational(self.scale, "scale")
        if self.scale <= 0:
            raise InvalidArgument("scale must be > 0")
        if self.eta < 0:
            raise InvalidArgument("eta must be >= 0")


@dataclass
class ConflictGraph:
    n: int
    edges: list[tuple[int, int]]

    @property
    def vertices(self) -> list[int]:
        return sorted({i for e in self.edges for i in e})

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {}
        for a, b in self.edges:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        return adj

    def is_cover(self, removed: Mask) -> bool:
        return all(removed >> a & 1 or removed >> b & 1 for a, b in self.edges)


@dataclass
class LusinResult:
    K: Mask
    value: float
    method: str
    optimal: bool
    nodes: int = 0
    details: dict = field(default_factory=dict)

    @property
    def removed(self) -> Mask:
        return self.details.get("full", 0) ^ self.K

    def to_json(self) -> dict:
        return {
            "K": hex(self.K),
            "removed": hex(self.removed),
            "value": f"{self.value:.15g}",
            "method": self.method,
            "optimal": self.optimal,
            "nodes": self.nodes,
        }


def conflict_pairs(instance: LusinInstance) -> ConflictGraph:
    """Pairs closer than ``scale`` whose values differ by more than ``eta``."""
    space, u, eta, scale = instance.space, instance.u, instance.eta, instance.scale
    n = space.n
    edges = []
    if space.is_grid:
        radius = math.ceil(scale / space.step) - 1
        for k in range(1, min(radius, n - 1) + 1):
            bad = np.nonzero(np.abs(u[k:] - u[:-k]) > eta)[0]
            edges.extend((int(i), int(i) + k) for i in bad)
    else:
        p, q = scale.numerator, scale.denominator
        close = space._dnum.astype(object) * q < p * space._dden
        diff = np.abs(u[:, None] - u[None, :]) > eta
        hit = np.triu(np.asarray(close, dtype=bool) & diff, k=1)
        edges = [(int(a), int(b)) for a, b in np.argwhere(hit)]
    edges.sort()
    return ConflictGraph(n, edges)


def _result(instance: LusinInstance, removed: Mask, method: str, optimal: bool,
            nodes: int = 0, **details) -> LusinResult:
    full = instance.space.full
    details["full"] = full
    return LusinResult(full ^ removed, instance.capacity(removed), method, optimal, nodes, details)


def exact_min_removal(instance: LusinInstance,
                      max_vertices: int = EXACT_MAX_CONFLICT_VERTICES) -> LusinResult:
    """Branch-and-bound over vertex covers of the conflict graph.

    Points outside the conflict graph stay in K.  Branching takes the vertex
    of largest uncovered degree and either removes it or keeps it (which
    removes all of its uncovered neighbours).  Monotonicity of v makes
    ``v(partial removal)`` an admissible lower bound.
    """
    graph = conflict_pairs(instance)
    verts = graph.vertices
    if len(verts) > max_vertices:
        raise SearchCapExceeded(
            f"{len(verts)} conflict vertices exceed the cap of {max_vertices}; use greedy_removal"
        )
    if not graph.edges:
        return _result(instance, 0, "exact", True)
    cap = instance.capacity
    adj = graph.adjacency()
    best: list = [None]
    nodes = [0]

    def search(R: Mask) -> None:
        nodes[0] += 1
        key = (cap.raw(R), R)
        if best[0] is not None and key >= best[0]:
            return
        degree: dict[int, int] = {}
        for a, b in graph.edges:
            if not (R >> a & 1 or R >> b & 1):
                degree[a] = degree.get(a, 0) + 1
                degree[b] = degree.get(b, 0) + 1
        if not degree:
            best[0] = key
            return
        x = min(degree, key=lambda i: (-degree[i], i))
        search(R | (1 << x))
        keep = R
        for y in adj[x]:
            if not R >> y & 1:
                keep |= 1 << y
        search(keep)

    search(0)
    return _result(instance, best[0][1], "exact", True, nodes[0])


def greedy_removal(instance: LusinInstance) -> LusinResult:
    """Remove the vertex with the smallest capacity increase per newly covered edge."""
    graph = conflict_pairs(instance)
    cap = instance.capacity
    R = 0
    steps = 0
    while True:
        degree: dict[int, int] = {}
        for a, b in graph.edges:
            if not (R >> a & 1 or R >> b & 1):
                degree[a] = degree.get(a, 0) + 1
                degree[b] = degree.get(b, 0) + 1
        if not degree:
            break
        base = cap(R)
        x = min(degree, key=lambda i: ((cap(R | (1 << i)) - base) / degree[i], i))
        R |= 1 << x
        steps += 1
    return _result(instance, R, "greedy", not graph.edges, steps)


def brute_force_oracle(instance: LusinInstance) -> LusinResult:
    """Enumerate every subset and keep the best conflict-free one."""
    n = instance.space.n
    if n > ORACLE_MAX_N:
        raise SizeCapError(f"brute force oracle is capped at n = {ORACLE_MAX_N}")
    graph = conflict_pairs(instance)
    removed = np.arange(1 << n, dtype=np.int64)
    feasible = np.ones(1 << n, dtype=bool)
    for a, b in graph.edges:
        feasible &= ((removed >> a) & 1 | (removed >> b) & 1).astype(bool)
    cap = instance.capacity
    best_val, best_R = None, None
    for R in np.nonzero(feasible)[0]:
        R = int(R)
        val = cap.raw(R)
        if best_val is None or val < best_val:
            best_val, best_R = val, R
    return _result(instance, best_R, "oracle", True, int(feasible.sum()))


def quantize_function(u, n: int) -> np.ndarray:
    """``floor(u * n) / n`` pointwise, computed on the exact value of each entry."""
    if not isinstance(n, int) or n < 1:
        raise InvalidArgument("quantization level must be a positive integer")
    out = []
    for x in u:
        k = math.floor(Fraction(x) * n)
        out.append(float(Fraction(k, n)))
    return np.array(out)


def partition_by_value(u) -> list[Mask]:
    """Level sets of ``u``, ordered by their lowest-index point."""
    cells: dict[float, Mask] = {}
    for i, x in enumerate(np.asarray(u, dtype=float)):
        cells[x] = cells.get(x, 0) | (1 << i)
    return sorted(cells.values(), key=lambda m: m & -m)


def default_shrink_schedule(space: FiniteMetricSpace, levels: int = 6) -> list[Fraction]:
    """Dyadic multiples of the smallest positive distance, down to that distance.

    Below the smallest distance every sandwich collapses to ``F = A = O``,
    which no longer says anything about the continuum sets the grid traces.
    """
    h = space.min_positive_distance()
    return [h * 2**j for j in range(levels, -1, -1)]


def _min_cross_distance(space: FiniteMetricSpace, cells: Sequence[Mask]) -> Optional[Fraction]:
    labelled = [(i, c) for c, cell in enumerate(cells) for i in indices_of(cell)]
    if len({c for _, c in labelled}) < 2:
        return None
    if space.coords is not None:
        labelled.sort(key=lambda t: space.coords[t[0]])
        gaps = [space.dist(i, j) for (i, a), (j, b) in zip(labelled, labelled[1:]) if a != b]
        return min(gaps)
    return min(space.dist(i, j) for i, a in labelled for j, b in labelled if a != b)


def constructive_simple(instance: LusinInstance, partition: Sequence[Mask], eps_budget: float,
                        shrink_schedule: Optional[Sequence] = None) -> LusinResult:
    """Build K from regular sandwiches of the level sets of a simple function.

    Cell ``k`` (counting from 0) gets the budget ``2**(-k-2) * eps_budget``,
    so the budgets sum to at most ``eps_budget / 2``.  Cells are kept up to
    the first index ``N`` at which the uncovered remainder has capacity at
    most ``eps_budget / 2``.
    """
    space, cap, u = instance.space, instance.capacity, instance.u
    if eps_budget <= 0:
        raise InvalidArgument("eps_budget must be > 0")
    seen = 0
    for cell in partition:
        if cell == 0:
            raise InvalidArgument("partition cells must be nonempty")
        if seen & cell:
            raise InvalidArgument("partition cells overlap")
        seen |= cell
        vals = u[indices_of(cell)]
        if not np.all(vals == vals[0]):
            raise InvalidArgument(f"u is not constant on cell {hex(cell)}; quantize first")
    if seen != space.full:
        raise InvalidArgument("partition does not cover the space")
    if shrink_schedule is None:
        shrink_schedule = default_shrink_schedule(space)

    ledger = []
    sandwiches = []
    for k, cell in enumerate(partition):
        budget = eps_budget * 2.0 ** (-k - 2)
        probe = regularity_probe(space, cap, cell, budget, shrink_schedule)
        ledger.append({"cell": k, "mask": hex(cell), "budget": budget, "value": probe.value,
                       "delta": str(probe.delta), "achieved": probe.achieved})
        if not probe.achieved:
            raise ConstructionInfeasible(
                f"cell {k} ({hex(cell)}, points {indices_of(cell)[:8]}) cannot be sandwiched "
                f"within {budget:.6g}; best v(O - F) = {probe.value:.6g}",
                cell_index=k, cell_mask=cell,
            )
        sandwiches.append(probe)

    union_F = 0
    N = len(partition)
    for k, probe in enumerate(sandwiches):
        union_F |= probe.F
        if cap(space.full & ~union_F) <= eps_budget / 2:
            N = k + 1
            break
    K = 0
    for probe in sandwiches[:N]:
        K |= probe.F
    value = cap(space.full ^ K)
    if value > eps_budget:
        raise ConstructionInfeasible(f"v(X - K) = {value:.6g} exceeds the budget {eps_budget}")

    kept = [p.F for p in sandwiches[:N] if p.F]
    scale = _min_cross_distance(space, kept)
    levels = sorted({float(u[indices_of(F)[0]]) for F in kept})
    eta = min(b - a for a, b in zip(levels, levels[1:])) / 2 if len(levels) > 1 else None
    if scale is not None and eta is not None:
        # K must be conflict-free for the modulus its own construction certifies
        check = LusinInstance(space, cap, u, eta, scale)
        for a, b in conflict_pairs(check).edges:
            if K >> a & 1 and K >> b & 1:
                raise RuntimeError("constructed K has a conflict pair")
    return _result(instance, space.full ^ K, "constructive", False, N,
                   cells=ledger, N=N, eta=eta, scale=None if scale is None else str(scale))
