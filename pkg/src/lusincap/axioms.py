"""Property checkers for set functions and the regularity prober."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .capacity import TOL, Capacity, DenseSetFunction
from .errors import InvalidArgument
from .finite_space import (
    FiniteMetricSpace,
    Mask,
    as_rational,
    check_mask,
    delta_shrink,
    open_neighborhood,
)

EXHAUSTIVE_PAIR_MAX_N = 10
DEFAULT_TRIALS = 10**6


@dataclass
class Witness:
    """Masks exhibiting a violation, their values and the size of the excess."""

    relation: str
    masks: tuple[Mask, ...]
    values: tuple[float, ...]
    excess: float

    def to_json(self) -> dict:
        return {
            "relation": self.relation,
            "masks": [hex(m) for m in self.masks],
            "values": [float(v) for v in self.values],
            "excess": float(self.excess),
        }


@dataclass
class PropertyReport:
    property: str
    holds: bool
    checked: int
    mode: str
    witness: Optional[Witness] = None
    seed: Optional[int] = None
    trials: Optional[int] = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {
            "property": self.property,
            "holds": self.holds,
            "checked": self.checked,
            "mode": self.mode,
            "witness": self.witness.to_json() if self.witness else None,
            "notes": list(self.notes),
        }
        if self.mode == "sampled":
            out["seed"] = self.seed
            out["trials"] = self.trials
        return out


# --- single-set axioms -------------------------------------------------------


def check_capacity_axioms(dense: DenseSetFunction) -> PropertyReport:
    """Normalization and monotonicity of a dense table.

    Monotonicity is checked on covering pairs ``S`` and ``S + {i}``; every
    comparable pair is linked by a chain of these.
    """
    T = dense.table
    n = dense.n
    full = dense.full
    notes = ["continuity from below is vacuous on a finite ground set; "
             "see the chain-probe scenarios"]
    checked = 2
    if abs(T[0]) > TOL:
        return PropertyReport("normalized", False, checked, "exhaustive",
                              Witness("v(empty) = 0", (0,), (T[0],), abs(float(T[0]))), notes=notes)
    if abs(T[full] - 1.0) > TOL:
        return PropertyReport("normalized", False, checked, "exhaustive",
                              Witness("v(X) = 1", (full,), (T[full],), abs(float(T[full]) - 1.0)),
                              notes=notes)
    masks = np.arange(1 << n)
    best = None
    for i in range(n):
        bit = 1 << i
        lower = masks[(masks & bit) == 0]
        drop = T[lower] - T[lower | bit]
        checked += len(lower)
        bad = np.nonzero(drop > TOL)[0]
        if len(bad):
            k = bad[0]
            cand = (int(lower[k]), int(lower[k] | bit))
            if best is None or cand < best:
                best = cand
    if best is not None:
        a, b = best
        return PropertyReport("monotone", False, checked, "exhaustive",
                              Witness("A subset B implies v(A) <= v(B)", (a, b), (T[a], T[b]),
                                      float(T[a] - T[b])), notes=notes)
    return PropertyReport("capacity", True, checked, "exhaustive", notes=notes)


# --- pair axioms ---------------------------------------------------------------


def _subadd_excess(T, A, B):
    return T[A | B] - T[A] - T[B]


def _two_alt_excess(T, A, B):
    return T[A | B] + T[A & B] - T[A] - T[B]


def _minimize(T, A: int, B: int, excess: Callable) -> tuple[int, int]:
    """Greedy bit removal from A then B while the violation persists."""
    changed = True
    while changed:
        changed = False
        for which in (0, 1):
            cur = A if which == 0 else B
            m = cur
            while m:
                bit = m & -m
                m ^= bit
                trial = cur ^ bit
                a2, b2 = (trial, B) if which == 0 else (A, trial)
                if excess(T, a2, b2) > TOL:
                    cur = trial
                    A, B = a2, b2
                    changed = True
    return A, B


def _pair_check(dense: DenseSetFunction, name: str, relation: str, excess: Callable,
                seed: int, trials: int, force_sampled: bool) -> PropertyReport:
    T = dense.table
    n = dense.n
    size = 1 << n
    if n <= EXHAUSTIVE_PAIR_MAX_N and not force_sampled:
        B = np.arange(size)
        block = 64
        for start in range(0, size, block):
            A = np.arange(start, min(size, start + block))[:, None]
            bad = np.argwhere(excess(T, A, B) > TOL)
            if len(bad):
                a, b = int(A[bad[0][0], 0]), int(bad[0][1])
                a, b = _minimize(T, a, b, excess)
                w = Witness(relation, (a, b), (T[a], T[b], T[a | b], T[a & b]),
                            float(excess(T, a, b)))
                return PropertyReport(name, False, size * size, "exhaustive", w)
        return PropertyReport(name, True, size * size, "exhaustive")
    rng = np.random.default_rng(seed)
    done = 0
    chunk = 1 << 16
    while done < trials:
        k = min(chunk, trials - done)
        A = rng.integers(0, size, size=k)
        B = rng.integers(0, size, size=k)
        bad = np.nonzero(excess(T, A, B) > TOL)[0]
        if len(bad):
            a, b = _minimize(T, int(A[bad[0]]), int(B[bad[0]]), excess)
            w = Witness(relation, (a, b), (T[a], T[b], T[a | b], T[a & b]), float(excess(T, a, b)))
            return PropertyReport(name, False, done + int(bad[0]) + 1, "sampled", w,
                                  seed=seed, trials=trials)
        done += k
    return PropertyReport(name, True, trials, "sampled", seed=seed, trials=trials)


def check_subadditive(dense: DenseSetFunction, seed: int = 0, trials: int = DEFAULT_TRIALS,
                      force_sampled: bool = False) -> PropertyReport:
    """``v(A | B) <= v(A) + v(B)`` over all pairs (n <= 10) or sampled pairs."""
    return _pair_check(dense, "subadditive", "v(A|B) <= v(A) + v(B)", _subadd_excess,
                       seed, trials, force_sampled)


def check_two_alternating(dense: DenseSetFunction, seed: int = 0, trials: int = DEFAULT_TRIALS,
                          force_sampled: bool = False) -> PropertyReport:
    """``v(A | B) + v(A & B) <= v(A) + v(B)`` over all or sampled pairs."""
    return _pair_check(dense, "two-alternating", "v(A|B) + v(A&B) <= v(A) + v(B)",
                       _two_alt_excess, seed, trials, force_sampled)


def reproduce_witness(dense: DenseSetFunction, report: PropertyReport) -> bool:
    """Re-evaluate a report's witness and confirm it still violates by more than TOL."""
    w = report.witness
    if w is None:
        return False
    T = dense.table
    if report.property == "subadditive":
        return _subadd_excess(T, *w.masks) > TOL
    if report.property == "two-alternating":
        return _two_alt_excess(T, *w.masks) > TOL
    if report.property == "monotone":
        a, b = w.masks
        return (a & ~b) == 0 and T[a] - T[b] > TOL
    if report.property == "normalized":
        (m,) = w.masks
        return abs(T[m] - (0.0 if m == 0 else 1.0)) > TOL
    return False


# --- regularity ----------------------------------------------------------------


@dataclass
class RegularityResult:
    F: Mask
    O: Mask
    value: float
    achieved: bool
    delta: Fraction
    tried: int

    def __iter__(self):
        # unpacks as (F, O, value, achieved)
        return iter((self.F, self.O, self.value, self.achieved))

    def to_json(self) -> dict:
        return {"F": hex(self.F), "O": hex(self.O), "value": self.value,
                "achieved": self.achieved, "delta": str(self.delta), "tried": self.tried}


def _check_schedule(schedule: Sequence) -> list[Fraction]:
    deltas = [as_rational(d, "shrink schedule entry") for d in schedule]
    if not deltas:
        raise InvalidArgument("shrink schedule is empty")
    if any(d <= 0 for d in deltas):
        raise InvalidArgument("shrink schedule entries must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise InvalidArgument("shrink schedule must be strictly decreasing")
    return deltas


def regularity_probe(space: FiniteMetricSpace, capacity: Capacity, A: Mask, eps: float,
                     shrink_schedule: Sequence) -> RegularityResult:
    """Search for ``F subset A subset O`` with ``v(O - F) <= eps``.

    For each delta in the schedule, F is the delta-shrink of A and O its
    open delta-neighbourhood.  The first delta meeting the budget wins;
    otherwise the pair with the smallest value is returned unachieved.
    """
    if eps <= 0:
        raise InvalidArgument("eps must be > 0")
    check_mask(A, space.n)
    deltas = _check_schedule(shrink_schedule)
    best = None
    for k, d in enumerate(deltas, start=1):
        F = delta_shrink(space, A, d)
        O = open_neighborhood(space, A, d)
        val = capacity(O & ~F)
        if val <= eps:
            return RegularityResult(F, O, val, True, d, k)
        if best is None or val < best.value:
            best = RegularityResult(F, O, val, False, d, k)
    best.tried = len(deltas)
    return best
