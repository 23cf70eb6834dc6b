"""Finite metric spaces with exact rational distances.

Subsets are plain Python ints used as bitsets: bit ``i`` set means point
``i`` belongs to the set.  Bits at or above ``n`` must be zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidArgument

MAX_POINTS = 4096
TRIANGLE_CHECK_MAX = 64

Mask = int


def as_rational(x, name="value") -> Fraction:
    """Coerce ``x`` to a Fraction, refusing floats.

    Strings such as ``"1/10"`` and ``[num, den]`` pairs are accepted.
    """
    if isinstance(x, bool):
        raise InvalidArgument(f"{name} must be rational, got bool")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError as exc:
            raise InvalidArgument(f"{name}: cannot parse {x!r} as a rational") from exc
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, int) and not isinstance(v, bool) for v in x
    ):
        if x[1] == 0:
            raise InvalidArgument(f"{name}: zero denominator")
        return Fraction(x[0], x[1])
    raise InvalidArgument(f"{name} must be an exact rational, got {type(x).__name__}")


# --- bitset helpers --------------------------------------------------------


def full_mask(n: int) -> Mask:
    return (1 << n) - 1


def complement(mask: Mask, n: int) -> Mask:
    return full_mask(n) ^ mask


def mask_from_indices(indices: Iterable[int], n: Optional[int] = None) -> Mask:
    m = 0
    for i in indices:
        if i < 0 or (n is not None and i >= n):
            raise InvalidArgument(f"index {i} out of range")
        m |= 1 << i
    return m


def indices_of(mask: Mask) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def popcount(mask: Mask) -> int:
    return bin(mask).count("1")


def mask_to_bool(mask: Mask, n: int) -> np.ndarray:
    nbytes = max(1, (n + 7) // 8)
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def mask_from_bool(arr) -> Mask:
    packed = np.packbits(np.asarray(arr, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def check_mask(mask: Mask, n: int) -> Mask:
    if not isinstance(mask, int) or mask < 0 or mask >> n:
        raise InvalidArgument(f"mask {mask!r} is not a subset of {n} points")
    return mask


def mask_hex(mask: Mask) -> str:
    return hex(mask)


# --- metric spaces ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A finite metric space whose distances are exact rationals.

    Three construction modes exist: a uniform grid on an interval (distances
    ``|i - j| * step``), arbitrary rational points on the line, and an
    explicit rational distance matrix.  In the last mode ``coords`` is None
    and interval descriptors cannot be realized.
    """

    n: int
    label: str
    coords: Optional[tuple[Fraction, ...]] = None
    start: Optional[Fraction] = None
    step: Optional[Fraction] = None
    # integer distance numerators over a common denominator (non-grid modes)
    _dnum: Optional[np.ndarray] = field(default=None, repr=False)
    _dden: int = field(default=1, repr=False)

    @property
    def is_grid(self) -> bool:
        return self.step is not None

    @property
    def full(self) -> Mask:
        return full_mask(self.n)

    def dist(self, i: int, j: int) -> Fraction:
        if self.is_grid:
            return abs(i - j) * self.step
        return Fraction(int(self._dnum[i, j]), self._dden)

    def coordinate(self, i: int) -> Fraction:
        if self.coords is None:
            raise InvalidArgument(f"space {self.label!r} has no coordinates")
        return self.coords[i]

    @property
    def coordinate_range(self) -> tuple[Fraction, Fraction]:
        if self.coords is None:
            raise InvalidArgument(f"space {self.label!r} has no coordinates")
        if self.is_grid:
            return self.start, self.start + (self.n - 1) * self.step
        return min(self.coords), max(self.coords)

    def min_positive_distance(self) -> Fraction:
        if self.n < 2:
            raise InvalidArgument("a one-point space has no positive distances")
        if self.is_grid:
            return self.step
        d = self._dnum[self._dnum > 0]
        return Fraction(int(d.min()), self._dden)

    def point_mask(self, i: int) -> Mask:
        if not 0 <= i < self.n:
            raise InvalidArgument(f"point {i} out of range")
        return 1 << i

    def nearest_index(self, x) -> int:
        """Index of the grid point closest to ``x`` (lowest index on ties)."""
        x = as_rational(x, "x")
        if self.coords is None:
            raise InvalidArgument(f"space {self.label!r} has no coordinates")
        return min(range(self.n), key=lambda i: (abs(self.coords[i] - x), i))

    # -- internals used by the neighbourhood operators

    def _within(self, members: np.ndarray, delta: Fraction, strict: bool) -> np.ndarray:
        """Boolean array of points whose distance to ``members`` is < or <= delta."""
        if not members.any():
            return np.zeros(self.n, dtype=bool)
        if self.is_grid:
            ratio = delta / self.step
            if strict:
                radius = math.ceil(ratio) - 1
            else:
                radius = math.floor(ratio)
            if radius < 0:
                return np.zeros(self.n, dtype=bool)
            c = np.concatenate(([0], np.cumsum(members, dtype=np.int64)))
            idx = np.arange(self.n)
            hi = np.minimum(self.n, idx + radius + 1)
            lo = np.maximum(0, idx - radius)
            return (c[hi] - c[lo]) > 0
        # d = dnum / dden compared with delta = p / q via cross multiplication
        p, q = delta.numerator, delta.denominator
        lhs = self._dnum[:, members]
        thr = p * self._dden
        if lhs.dtype == object or int(self._dnum.max()) * q >= 2**62 or thr >= 2**62:
            lhs = lhs.astype(object) * q
        else:
            lhs = lhs * q
        hit = (lhs < thr) if strict else (lhs <= thr)
        return np.asarray(hit.any(axis=1), dtype=bool)


def _check_size(n: int) -> None:
    if n < 1:
        raise InvalidArgument("a space needs at least one point")
    if n > MAX_POINTS:
        raise InvalidArgument(f"point count {n} exceeds the cap of {MAX_POINTS}")


def _integer_matrix(rows: Sequence[Sequence[Fraction]]) -> tuple[np.ndarray, int]:
    den = 1
    for row in rows:
        for x in row:
            den = den * x.denominator // math.gcd(den, x.denominator)
    nums = [[int(x * den) for x in row] for row in rows]
    biggest = max((abs(v) for row in nums for v in row), default=0)
    dtype = np.int64 if biggest < 2**62 else object
    return np.array(nums, dtype=dtype), den


def _check_metric(dnum: np.ndarray, n: int) -> None:
    if dnum.shape != (n, n):
        raise InvalidArgument("distance matrix must be square")
    if (np.diag(dnum) != 0).any():
        raise InvalidArgument("d(i, i) must be 0")
    if (dnum != dnum.T).any():
        raise InvalidArgument("distance matrix must be symmetric")
    if (dnum < 0).any():
        raise InvalidArgument("distances must be nonnegative")
    off = dnum + np.eye(n, dtype=dnum.dtype)
    if n > 1 and (off == 0).any():
        raise InvalidArgument("distinct points must have positive distance")
    if n <= TRIANGLE_CHECK_MAX:
        # d(i,k) <= d(i,j) + d(j,k) for every triple
        lhs = dnum[:, None, :]
        rhs = dnum[:, :, None] + dnum[None, :, :]
        if (lhs > rhs).any():
            raise InvalidArgument("triangle inequality violated")


def build_interval_grid(resolution: int, a=0, b=1, label: Optional[str] = None) -> FiniteMetricSpace:
    """Uniform grid of ``resolution`` points from ``a`` to ``b`` inclusive."""
    if not isinstance(resolution, int) or resolution < 2:
        raise InvalidArgument(f"resolution must be an integer >= 2, got {resolution!r}")
    _check_size(resolution)
    a, b = as_rational(a, "a"), as_rational(b, "b")
    if not a < b:
        raise InvalidArgument("grid needs a < b")
    h = (b - a) / (resolution - 1)
    coords = tuple(a + i * h for i in range(resolution))
    return FiniteMetricSpace(
        n=resolution,
        label=label or f"grid({resolution},{a},{b})",
        coords=coords,
        start=a,
        step=h,
    )


def space_from_points(points: Sequence, label: Optional[str] = None) -> FiniteMetricSpace:
    """Distinct rational points on the real line with ``d(x, y) = |x - y|``."""
    coords = tuple(as_rational(p, "point") for p in points)
    n = len(coords)
    _check_size(n)
    if len(set(coords)) != n:
        raise InvalidArgument("points must be distinct")
    dnum, dden = _integer_matrix([[abs(x - y) for y in coords] for x in coords])
    _check_metric(dnum, n)
    return FiniteMetricSpace(n=n, label=label or f"points({n})", coords=coords, _dnum=dnum, _dden=dden)


def space_from_distances(matrix: Sequence[Sequence], label: Optional[str] = None) -> FiniteMetricSpace:
    rows = [[as_rational(x, "distance") for x in row] for row in matrix]
    n = len(rows)
    _check_size(n)
    dnum, dden = _integer_matrix(rows)
    _check_metric(dnum, n)
    return FiniteMetricSpace(n=n, label=label or f"metric({n})", _dnum=dnum, _dden=dden)


# --- neighbourhood operators -----------------------------------------------


def open_neighborhood(space: FiniteMetricSpace, A: Mask, delta) -> Mask:
    """Points at distance strictly less than ``delta`` from ``A``."""
    delta = as_rational(delta, "delta")
    if delta <= 0:
        raise InvalidArgument("open neighbourhood needs delta > 0")
    check_mask(A, space.n)
    if A == 0:
        return 0
    return mask_from_bool(space._within(mask_to_bool(A, space.n), delta, strict=True))


def closed_neighborhood(space: FiniteMetricSpace, A: Mask, delta) -> Mask:
    """Points at distance at most ``delta`` from ``A``; empty for empty ``A``."""
    delta = as_rational(delta, "delta")
    if delta < 0:
        raise InvalidArgument("closed neighbourhood needs delta >= 0")
    check_mask(A, space.n)
    if A == 0:
        return 0
    return mask_from_bool(space._within(mask_to_bool(A, space.n), delta, strict=False))


def delta_shrink(space: FiniteMetricSpace, A: Mask, delta) -> Mask:
    """Points of ``A`` farther than ``delta`` from every point outside ``A``."""
    delta = as_rational(delta, "delta")
    if delta < 0:
        raise InvalidArgument("delta_shrink needs delta >= 0")
    check_mask(A, space.n)
    outside = complement(A, space.n)
    return complement(closed_neighborhood(space, outside, delta), space.n)


# --- set descriptors -------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lo", as_rational(self.lo, "lo"))
        object.__setattr__(self, "hi", as_rational(self.hi, "hi"))
        if self.lo > self.hi:
            raise InvalidArgument(f"interval endpoints reversed: {self.lo} > {self.hi}")

    def contains(self, x: Fraction) -> bool:
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above and below

    def to_json(self) -> list:
        return [
            "[" if self.lo_closed else "(",
            self.lo.numerator,
            self.lo.denominator,
            self.hi.numerator,
            self.hi.denominator,
            "]" if self.hi_closed else ")",
        ]

    @classmethod
    def from_json(cls, data) -> "Interval":
        if not isinstance(data, (list, tuple)) or len(data) != 6:
            raise InvalidArgument(f"malformed interval {data!r}")
        left, ln, ld, rn, rd, right = data
        if left not in ("[", "(") or right not in ("]", ")"):
            raise InvalidArgument(f"malformed interval brackets in {data!r}")
        return cls(as_rational([ln, ld]), as_rational([rn, rd]), left == "[", right == "]")

    def __str__(self) -> str:
        l = "[" if self.lo_closed else "("
        r = "]" if self.hi_closed else ")"
        return f"{l}{self.lo}, {self.hi}{r}"


DESCRIPTOR_KINDS = ("intervals", "mask", "whole", "empty")


@dataclass(frozen=True)
class SetDescriptor:
    """Resolution-independent description of a subset of the space.

    Interval unions keep their open/closed flags so that a grid trace still
    knows which continuum set it stands for.
    """

    kind: str
    intervals: tuple[Interval, ...] = ()
    mask: Optional[Mask] = None

    def __post_init__(self):
        if self.kind not in DESCRIPTOR_KINDS:
            raise InvalidArgument(f"unknown descriptor kind {self.kind!r}")
        if self.kind == "intervals" and not self.intervals:
            raise InvalidArgument("interval descriptor needs at least one interval")
        if self.kind == "mask" and (not isinstance(self.mask, int) or self.mask < 0):
            raise InvalidArgument("mask descriptor needs a nonnegative int mask")

    @classmethod
    def interval(cls, lo, hi, lo_closed=True, hi_closed=True) -> "SetDescriptor":
        return cls("intervals", (Interval(lo, hi, lo_closed, hi_closed),))

    @classmethod
    def whole(cls) -> "SetDescriptor":
        return cls("whole")

    @classmethod
    def empty(cls) -> "SetDescriptor":
        return cls("empty")

    @property
    def is_open(self) -> bool:
        """True when every interval is open at both ends (relative openness at
        the boundary of the ambient interval is not tracked)."""
        if self.kind in ("whole", "empty"):
            return True
        if self.kind == "mask":
            return False
        return all(not iv.lo_closed and not iv.hi_closed for iv in self.intervals)

    def to_json(self):
        if self.kind in ("whole", "empty"):
            return self.kind
        if self.kind == "mask":
            return {"mask": hex(self.mask)}
        return {"intervals": [iv.to_json() for iv in self.intervals]}

    @classmethod
    def from_json(cls, data) -> "SetDescriptor":
        if data in ("whole", "empty"):
            return cls(data)
        if isinstance(data, dict) and set(data) == {"mask"}:
            try:
                return cls("mask", mask=int(data["mask"], 16))
            except (TypeError, ValueError) as exc:
                raise InvalidArgument(f"bad mask {data['mask']!r}") from exc
        if isinstance(data, dict) and set(data) == {"intervals"}:
            return cls("intervals", tuple(Interval.from_json(iv) for iv in data["intervals"]))
        if isinstance(data, list) and len(data) == 6 and data[0] in ("[", "("):
            return cls("intervals", (Interval.from_json(data),))
        raise InvalidArgument(f"malformed set descriptor {data!r}")

    def __str__(self) -> str:
        if self.kind == "intervals":
            return " U ".join(str(iv) for iv in self.intervals)
        if self.kind == "mask":
            return f"mask {hex(self.mask)}"
        return self.kind


def _grid_index_range(space: FiniteMetricSpace, iv: Interval) -> tuple[int, int]:
    t = (iv.lo - space.start) / space.step
    s = (iv.hi - space.start) / space.step
    first = math.ceil(t) if iv.lo_closed else math.floor(t) + 1
    last = math.floor(s) if iv.hi_closed else math.ceil(s) - 1
    return max(first, 0), min(last, space.n - 1)


def realize_descriptor(space: FiniteMetricSpace, desc: SetDescriptor) -> Mask:
    """Trace of the described set on the points of ``space``."""
    if desc.kind == "whole":
        return space.full
    if desc.kind == "empty":
        return 0
    if desc.kind == "mask":
        return check_mask(desc.mask, space.n)
    if space.coords is None:
        raise InvalidArgument("interval descriptors need a space with coordinates")
    lo_c, hi_c = space.coordinate_range
    out = 0
    for iv in desc.intervals:
        if iv.lo < lo_c or iv.hi > hi_c:
            raise InvalidArgument(f"interval {iv} leaves the coordinate range [{lo_c}, {hi_c}]")
        if space.is_grid:
            first, last = _grid_index_range(space, iv)
            if first <= last:
                out |= ((1 << (last - first + 1)) - 1) << first
        else:
            for i, x in enumerate(space.coords):
                if iv.contains(x):
                    out |= 1 << i
    return out
