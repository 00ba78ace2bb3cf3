"""Binary lambda-expansion point sets and their interval neighbourhoods.

At level n the two-digit system produces the 2^(n+1) sums

    (1 - lam) * sum_{j=0..n} a_j * lam^j,       a_j in {0, 1},

all lying in [0, 1 - lam^(n+1)] for lam in [1/2, 1).  Around each point we
place a closed ball of radius c * 2^(-alpha*n); the union of the balls,
clipped to [0, 1], is the level-n neighbourhood.  The limsup of these
neighbourhoods over n is the target set of the whole toolkit.

Conventions:
    * Points are a sorted multiset (values plus integer multiplicities).
      Algebraic lam can collide exactly (lam^2 + lam = 1 at the golden
      ratio); values closer than a snap tolerance are merged with summed
      multiplicity.
    * Interval unions are closed, pairwise disjoint, sorted and contained
      in [0, 1].  Clipping to [0, 1] happens at construction; boundary
      (measure zero) differences never matter downstream.
    * Enumeration is refused for n > MAX_ENUM_LEVEL; parameter sweeps that
      need larger n go through the Fourier module, which never
      materialises the point set.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

# Merging tolerance for exactly colliding centers; float rounding of true
# algebraic collisions can exceed this, so callers may widen it.
DEFAULT_SNAP_TOL = 2.0 ** -60

# 2^(n+1) values have to be materialised; beyond this the Fourier product
# formula is the only supported route.
MAX_ENUM_LEVEL = 26


@dataclass(frozen=True)
class ExpansionParams:
    """Parameters (lam, alpha, n, c) of a level-n expansion neighbourhood.

    The ball radius is c * 2^(-alpha*n).  lam = 1/2 is allowed (dyadic
    anchor case used by every closed-form check) even though the
    interesting regime is lam > 1/2.
    """

    lam: float
    alpha: float
    n: int
    c: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.lam < 1.0:
            raise ValueError(f"lam must be in [1/2, 1), got {self.lam}")
        if self.alpha < 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError(f"n must be a nonnegative integer, got {self.n}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")

    @property
    def radius(self) -> float:
        return self.c * 2.0 ** (-self.alpha * self.n)


@dataclass(frozen=True)
class PointMultiset:
    """Sorted distinct values with positive integer multiplicities."""

    values: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        m = np.asarray(self.multiplicities, dtype=np.int64)
        if v.shape != m.shape or v.ndim != 1:
            raise ValueError("values and multiplicities must be 1d and aligned")
        if v.size and np.any(np.diff(v) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(m <= 0):
            raise ValueError("multiplicities must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "multiplicities", m)

    @property
    def total_multiplicity(self) -> int:
        return int(self.multiplicities.sum())

    def __len__(self) -> int:
        return self.values.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "multiplicity"])
        for v, m in zip(self.values, self.multiplicities):
            w.writerow([repr(float(v)), int(m)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PointMultiset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["value", "multiplicity"]:
            raise ValueError("expected header 'value,multiplicity'")
        vals = np.array([float(r[0]) for r in rows[1:]])
        mult = np.array([int(r[1]) for r in rows[1:]], dtype=np.int64)
        return cls(vals, mult)


class IntervalUnion:
    """Finite union of closed disjoint subintervals of [0, 1].

    Construction clips to [0, 1], drops empty pieces, sorts and merges
    overlapping or touching intervals, so the invariants hold by
    construction.
    """

    __slots__ = ("intervals",)

    def __init__(self, pairs=(), clip: bool = True):
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        if clip and arr.size:
            arr = np.clip(arr, 0.0, 1.0)
        arr = arr[arr[:, 1] > arr[:, 0]]
        if arr.size:
            arr = arr[np.argsort(arr[:, 0], kind="stable")]
            merged = [list(arr[0])]
            for a, b in arr[1:]:
                if a <= merged[-1][1]:
                    merged[-1][1] = max(merged[-1][1], b)
                else:
                    merged.append([a, b])
            arr = np.array(merged)
        else:
            arr = np.empty((0, 2))
        if arr.size and (arr[0, 0] < 0.0 or arr[-1, 1] > 1.0):
            raise ValueError("intervals must lie inside [0, 1]")
        self.intervals = arr

    @classmethod
    def from_balls(cls, centers, radius: float) -> "IntervalUnion":
        c = np.asarray(centers, dtype=float)
        return cls(np.column_stack([c - radius, c + radius]))

    @property
    def measure(self) -> float:
        if not self.intervals.size:
            return 0.0
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    def __len__(self) -> int:
        return self.intervals.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalUnion) and np.array_equal(
            self.intervals, other.intervals
        )

    def __repr__(self) -> str:
        inside = " u ".join(f"[{a:.6g},{b:.6g}]" for a, b in self.intervals)
        return f"IntervalUnion({inside or 'empty'})"

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i, 0], b[j, 0])
            hi = min(a[i, 1], b[j, 1])
            if lo < hi:
                out.append((lo, hi))
            if a[i, 1] < b[j, 1]:
                i += 1
            else:
                j += 1
        return IntervalUnion(out)

    def contains_point(self, x: float) -> bool:
        if not self.intervals.size:
            return False
        k = np.searchsorted(self.intervals[:, 0], x, side="right") - 1
        return k >= 0 and x <= self.intervals[k, 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["left", "right"])
        for a, b in self.intervals:
            w.writerow([repr(float(a)), repr(float(b))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "IntervalUnion":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["left", "right"]:
            raise ValueError("expected header 'left,right'")
        return cls([(float(r[0]), float(r[1])) for r in rows[1:]])


def enumerate_points(
    params: ExpansionParams, snap_tol: float = DEFAULT_SNAP_TOL
) -> PointMultiset:
    """All level-n expansion values, deduplicated with multiplicities.

    Total multiplicity is exactly 2^(n+1).  Values within snap_tol of each
    other are merged; chains cannot percolate since distinct algebraic
    values are far apart compared to any sensible tolerance.
    """
    n = params.n
    if n > MAX_ENUM_LEVEL:
        raise ValueError(
            f"level n={n} would materialise 2^{n + 1} points; "
            f"enumeration is capped at n={MAX_ENUM_LEVEL} "
            "(use the Fourier product formula for larger levels)"
        )
    v = np.zeros(1)
    for j in range(n + 1):
        v = np.concatenate([v, v + params.lam**j])
    v = np.sort((1.0 - params.lam) * v)
    if snap_tol > 0 and v.size > 1:
        new_group = np.concatenate([[True], np.diff(v) > snap_tol])
    else:
        new_group = np.ones(v.size, dtype=bool)
    idx = np.flatnonzero(new_group)
    mult = np.diff(np.concatenate([idx, [v.size]]))
    return PointMultiset(v[idx], mult)


def build_level_set(params: ExpansionParams, snap_tol: float = DEFAULT_SNAP_TOL) -> IntervalUnion:
    """Union of closed radius-c*2^(-alpha*n) balls around the level-n points.

    Clipped to [0, 1] and merged; independent of enumeration order by
    construction.
    """
    pts = enumerate_points(params, snap_tol=snap_tol)
    return IntervalUnion.from_balls(pts.values, params.radius)


def union_measure(E: IntervalUnion) -> float:
    """Lebesgue measure of the union."""
    return E.measure


def intersect(E: IntervalUnion, I: IntervalUnion) -> IntervalUnion:
    """Exact intersection, renormalised to the type invariants."""
    return E.intersect(I)
