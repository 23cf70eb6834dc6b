"""Capacities on finite metric spaces.

A :class:`Capacity` wraps a pure evaluator ``mask -> value``.  When every
constructor parameter is rational the evaluator works in exact arithmetic
(:class:`fractions.Fraction`) and ``capacity(mask)`` is the correctly
rounded float of the exact value, so floating-point results stay monotone
and ties stay ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateRestriction, InvalidArgument, SizeCapError
from .finite_space import (
    FiniteMetricSpace,
    Mask,
    as_rational,
    check_mask,
    closed_neighborhood,
    full_mask,
    mask_to_bool,
    space_from_points,
)

TOL = 1e-12
DENSE_MAX_N = 20

Value = Union[Fraction, float]


def _is_exact(x) -> bool:
    return isinstance(x, (int, Rational, str)) and not isinstance(x, bool)


class WeightVector:
    """Nonnegative per-point weights summing to one.

    Exact weights (ints, Fractions, rational strings) are stored as integer
    numerators over a common denominator; anything else is stored as floats.
    """

    def __init__(self, weights):
        weights = list(weights)
        if not weights:
            raise InvalidArgument("weight vector is empty")
        if all(_is_exact(w) for w in weights):
            fr = [as_rational(w, "weight") for w in weights]
            if any(w < 0 for w in fr):
                raise InvalidArgument("weights must be nonnegative")
            if sum(fr) != 1:
                raise InvalidArgument(f"weights sum to {sum(fr)}, not 1")
            den = 1
            for w in fr:
                den = den * w.denominator // math.gcd(den, w.denominator)
            nums = [int(w * den) for w in fr]
            self.denominator = den
            self.numerators = np.array(nums, dtype=np.int64 if den < 2**62 else object)
            self.fractions: Optional[tuple[Fraction, ...]] = tuple(fr)
            self.values = np.array([float(w) for w in fr])
        else:
            vals = np.asarray(weights, dtype=float)
            if not np.all(np.isfinite(vals)) or (vals < 0).any():
                raise InvalidArgument("weights must be finite and nonnegative")
            if abs(math.fsum(vals) - 1.0) > TOL:
                raise InvalidArgument(f"weights sum to {math.fsum(vals)!r}, not 1 within {TOL}")
            self.denominator = None
            self.numerators = None
            self.fractions = None
            self.values = vals

    def __len__(self) -> int:
        return len(self.values)

    @property
    def exact(self) -> bool:
        return self.fractions is not None

    def mass(self, members: np.ndarray) -> Value:
        """Total weight of the points flagged in the boolean array."""
        if self.exact:
            return Fraction(int(self.numerators[members].sum()), self.denominator)
        return math.fsum(self.values[members])

    def __repr__(self) -> str:
        body = self.fractions if self.exact else self.values.tolist()
        return f"WeightVector({[str(x) for x in body] if self.exact else body})"

    # common families, indexed by point position

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls([Fraction(1, n)] * n)

    @classmethod
    def tent(cls, n: int) -> "WeightVector":
        """Discretized triangular density peaking in the middle of the grid."""
        raw = [min(i, n - 1 - i) + 1 for i in range(n)]
        total = sum(raw)
        return cls([Fraction(r, total) for r in raw])

    @classmethod
    def ramp(cls, n: int) -> "WeightVector":
        raw = list(range(1, n + 1))
        total = sum(raw)
        return cls([Fraction(r, total) for r in raw])

    @classmethod
    def point_mass(cls, n: int, i: int) -> "WeightVector":
        return cls([1 if j == i else 0 for j in range(n)])

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, exact: bool = True, scale: int = 20) -> "WeightVector":
        """Random weights; exact ones have small integer numerators."""
        if exact:
            raw = rng.integers(0, scale + 1, size=n)
            if raw.sum() == 0:
                raw[rng.integers(n)] = 1
            total = int(raw.sum())
            return cls([Fraction(int(r), total) for r in raw])
        raw = rng.random(n)
        raw = raw / raw.sum()
        # push the rounding residue onto the largest entry
        raw[np.argmax(raw)] += 1.0 - math.fsum(raw)
        return cls(raw)


class Capacity:
    """Normalized monotone set function on the subsets of ``space``.

    ``capacity(mask)`` returns a float; ``capacity.exact_value(mask)``
    returns the underlying Fraction when the construction is exact.
    """

    def __init__(self, space: FiniteMetricSpace, fn: Callable[[Mask], Value], kind: str,
                 params: Optional[dict] = None, exact: bool = False):
        self.space = space
        self.kind = kind
        self.params = dict(params or {})
        self.exact = exact
        self._fn = fn
        empty, whole = self._fn(0), self._fn(space.full)
        if abs(float(empty)) > TOL or abs(float(whole) - 1.0) > TOL:
            raise InvalidArgument(
                f"{kind} evaluator is not normalized: v(empty)={float(empty)}, v(X)={float(whole)}"
            )

    @property
    def n(self) -> int:
        return self.space.n

    def __call__(self, mask: Mask) -> float:
        return float(self._fn(mask))

    def exact_value(self, mask: Mask) -> Fraction:
        if not self.exact:
            raise InvalidArgument(f"{self.kind} capacity has no exact evaluator")
        return self._fn(mask)

    def raw(self, mask: Mask) -> Value:
        """Exact value when available, else float."""
        return self._fn(mask)

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "space": self.space.label,
                "exact": self.exact, "params": self.params}

    def __repr__(self) -> str:
        return f"Capacity(kind={self.kind!r}, n={self.n}, params={self.params})"


def _checked(space: FiniteMetricSpace, w: WeightVector) -> WeightVector:
    if not isinstance(w, WeightVector):
        w = WeightVector(w)
    if len(w) != space.n:
        raise InvalidArgument(f"weight vector has {len(w)} entries for {space.n} points")
    return w


def measure_from_weights(space: FiniteMetricSpace, w) -> Capacity:
    w = _checked(space, w)
    n = space.n

    def fn(mask: Mask) -> Value:
        return w.mass(mask_to_bool(mask, n))

    return Capacity(space, fn, "measure", {"weights": w}, exact=w.exact)


def sup_of_measures(space: FiniteMetricSpace, measures: Sequence) -> Capacity:
    """Pointwise maximum of finitely many probability measures."""
    if not measures:
        raise InvalidArgument("sup_of_measures needs at least one measure")
    ws = [_checked(space, w) for w in measures]
    n = space.n

    def fn(mask: Mask) -> Value:
        members = mask_to_bool(mask, n)
        return max(w.mass(members) for w in ws)

    return Capacity(space, fn, "sup-of-measures", {"measures": ws, "m": len(ws)},
                    exact=all(w.exact for w in ws))


def huber_contamination(space: FiniteMetricSpace, mu, eps, delta) -> Capacity:
    """``v(A) = min(mu(closed delta-neighbourhood of A) + eps, 1)``, ``v(empty) = 0``.

    Every subset of a finite space is closed, so the formula is applied to
    all nonempty masks.
    """
    mu = _checked(space, mu)
    eps = as_rational(eps, "eps")
    delta = as_rational(delta, "delta")
    if eps < 0:
        raise InvalidArgument("eps must be >= 0")
    if delta <= 0:
        raise InvalidArgument("delta must be > 0")
    n = space.n
    eps_f = float(eps)

    def fn(mask: Mask) -> Value:
        if mask == 0:
            return Fraction(0) if mu.exact else 0.0
        nb = mask_to_bool(closed_neighborhood(space, mask, delta), n)
        if mu.exact:
            return min(mu.mass(nb) + eps, Fraction(1))
        return min(mu.mass(nb) + eps_f, 1.0)

    return Capacity(space, fn, "huber", {"mu": mu, "eps": eps, "delta": delta,
                                         "extension": "formula applied to every nonempty trace"},
                    exact=mu.exact)


def restrict_normalize(capacity: Capacity, O: Mask) -> Capacity:
    """``A -> v(A minus O) / v(X minus O)``."""
    space = capacity.space
    check_mask(O, space.n)
    keep = space.full ^ O
    denom = capacity.raw(keep)
    if denom == 0:
        raise DegenerateRestriction("v(X \\ O) = 0; handle this case separately")

    def fn(mask: Mask) -> Value:
        return capacity.raw(mask & keep) / denom

    return Capacity(space, fn, "restricted", {"base": capacity.kind, "O": hex(O)},
                    exact=capacity.exact)


# --- dense tables ----------------------------------------------------------


@dataclass
class DenseSetFunction:
    """All ``2**n`` values of a set function, indexed by mask."""

    n: int
    table: np.ndarray

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float)
        if self.table.shape != (1 << self.n,):
            raise InvalidArgument(f"table length {self.table.shape} does not match 2**{self.n}")

    def __getitem__(self, mask: Mask) -> float:
        return float(self.table[mask])

    @property
    def full(self) -> Mask:
        return full_mask(self.n)


def _cap_dense(n: int) -> None:
    if n > DENSE_MAX_N:
        raise SizeCapError(f"dense materialization capped at n = {DENSE_MAX_N}, got {n}")


def dense_table(capacity: Capacity) -> DenseSetFunction:
    _cap_dense(capacity.n)
    size = 1 << capacity.n
    return DenseSetFunction(capacity.n, np.fromiter((capacity(m) for m in range(size)),
                                                    dtype=float, count=size))


def capacity_from_table(dense: DenseSetFunction, space: Optional[FiniteMetricSpace] = None,
                        kind: str = "dense") -> Capacity:
    if space is None:
        space = space_from_points(range(dense.n), label=f"points({dense.n})")
    if space.n != dense.n:
        raise InvalidArgument("table size does not match the space")
    table = dense.table
    return Capacity(space, lambda m: float(table[m]), kind, {"n": dense.n})


def additive_table(weights: np.ndarray) -> np.ndarray:
    """Table of ``sum_{i in mask} w_i`` for every mask (lowest-bit recurrence)."""
    n = len(weights)
    _cap_dense(n)
    out = np.zeros(1 << n)
    for i in range(n):
        out[1 << i: 1 << (i + 1)] = out[: 1 << i] + weights[i]
    return out


def _subset_sum(values: np.ndarray, n: int, sign: float) -> np.ndarray:
    out = np.array(values, dtype=float, copy=True)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] += sign * view[:, 0, :]
    return out


def mobius_transform(dense: DenseSetFunction) -> np.ndarray:
    """Signed masses ``m(S) = sum_{T subset S} (-1)^{|S - T|} v(T)``."""
    _cap_dense(dense.n)
    return _subset_sum(dense.table, dense.n, -1.0)


def zeta_transform(masses: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`mobius_transform`: ``v(S) = sum_{T subset S} m(T)``."""
    _cap_dense(n)
    masses = np.asarray(masses, dtype=float)
    if masses.shape != (1 << n,):
        raise InvalidArgument("mass table has the wrong length")
    return _subset_sum(masses, n, 1.0)


# --- Choquet integral --------------------------------------------------------


def choquet_integral(capacity: Capacity, u) -> float:
    """Choquet integral of the per-point values ``u``.

    Computed as ``min u + sum_k (t_k - t_{k-1}) v({u >= t_k})`` over the
    distinct values ``t_k`` of ``u`` in increasing order.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (capacity.n,):
        raise InvalidArgument(f"u has shape {u.shape}, expected ({capacity.n},)")
    if not np.all(np.isfinite(u)):
        raise InvalidArgument("u must be finite")
    levels = np.unique(u)
    total = float(levels[0])
    order = np.argsort(-u, kind="stable")
    # upper level sets grow as the threshold falls, so build them incrementally
    level_mask = {}
    mask = 0
    pos = 0
    for t in levels[::-1]:
        while pos < len(order) and u[order[pos]] >= t:
            mask |= 1 << int(order[pos])
            pos += 1
        level_mask[t] = mask
    for prev, t in zip(levels[:-1], levels[1:]):
        total += (float(t) - float(prev)) * capacity(level_mask[t])
    return total
