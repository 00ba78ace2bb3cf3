"""Exact dyadic net measures by tree recursion, and Frostman-condition ratios.

The net measure of a set E at exponent t is the cheapest cover price

    M_t(E) = inf { sum_i |D_i|^t :  E subset of union D_i },

over covers by dyadic intervals D = [i 2^-j, (i+1) 2^-j] of [0, 1].  Since
dyadic intervals are nested or disjoint, an optimal cover can be taken
disjoint, and the infimum satisfies the exact recursion

    M(D) = 0                                    if D does not meet E,
    M(D) = |D|^t                                if D is inside E (t <= 1),
    M(D) = min(|D|^t, M(D_left) + M(D_right))   otherwise,

truncated at a maximum depth where every still-meeting interval pays
|D|^t.  Sets are snapped OUTWARD to the 2^-max_depth grid first; outward
snapping can only increase the value, keeping Frostman lower bounds
conservative, and makes the recursion exact for grid-aligned sets.

All interval bookkeeping is done in integer leaf units, so no floating
point enters the combinatorics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .expansions import IntervalUnion, ExpansionParams, build_level_set

DEFAULT_MAX_DEPTH = 20


@dataclass(frozen=True)
class DyadicInterval:
    """[index * 2^-level, (index+1) * 2^-level] inside [0, 1]."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.index < 2**self.level:
            raise ValueError(f"bad dyadic address ({self.level}, {self.index})")

    @property
    def left(self) -> float:
        return self.index * 2.0**-self.level

    @property
    def right(self) -> float:
        return (self.index + 1) * 2.0**-self.level

    @property
    def length(self) -> float:
        return 2.0**-self.level

    def as_interval_union(self) -> IntervalUnion:
        return IntervalUnion([(self.left, self.right)])


@dataclass(frozen=True)
class NetMeasureResult:
    value: float
    optimal_cover: tuple
    exact: bool


def _snap_units(E: IntervalUnion, max_depth: int):
    """Outward integer snapping of E to the 2^-max_depth leaf grid.

    Returns (los, his, exact) with half-open unit ranges [lo, hi).
    """
    scale = 1 << max_depth
    if not len(E):
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), True
    raw = E.intervals * scale
    los = np.floor(raw[:, 0] + 1e-12).astype(np.int64)
    his = np.ceil(raw[:, 1] - 1e-12).astype(np.int64)
    exact = bool(np.all(np.abs(raw[:, 0] - los) < 1e-9) and np.all(np.abs(raw[:, 1] - his) < 1e-9))
    # snapping may have merged neighbours
    merged = [[los[0], his[0]]]
    for lo, hi in zip(los[1:], his[1:]):
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    arr = np.array(merged, dtype=np.int64)
    return arr[:, 0], arr[:, 1], exact


class _NetDP:
    """One recursion over the dyadic tree for a fixed snapped set."""

    def __init__(self, los, his, t, max_depth):
        self.los = los
        self.his = his
        self.t = t
        self.max_depth = max_depth
        self.lengths = 2.0 ** (-t * np.arange(max_depth + 1))

    def classify(self, lo: int, hi: int) -> int:
        """-1 empty intersection, 1 contained in E, 0 partial."""
        i = np.searchsorted(self.his, lo, side="right")
        if i == len(self.los) or self.los[i] >= hi:
            return -1
        if self.los[i] <= lo and self.his[i] >= hi:
            return 1
        return 0

    def value(self, level: int, index: int, visit=None) -> float:
        span = 1 << (self.max_depth - level)
        lo = index * span
        cls = self.classify(lo, lo + span)
        price = self.lengths[level]
        if cls < 0:
            val = 0.0
        elif cls > 0 or level == self.max_depth:
            val = price
        else:
            val = min(
                price,
                self.value(level + 1, 2 * index, visit)
                + self.value(level + 1, 2 * index + 1, visit),
            )
        if visit is not None:
            visit(level, index, cls, val)
        return val

    def cover(self, level: int, index: int, out: list):
        span = 1 << (self.max_depth - level)
        lo = index * span
        cls = self.classify(lo, lo + span)
        if cls < 0:
            return
        if cls > 0 or level == self.max_depth:
            out.append(DyadicInterval(level, index))
            return
        left = self.value(level + 1, 2 * index)
        right = self.value(level + 1, 2 * index + 1)
        # ties broken toward the coarser cube for reproducible covers
        if self.lengths[level] <= left + right:
            out.append(DyadicInterval(level, index))
        else:
            self.cover(level + 1, 2 * index, out)
            self.cover(level + 1, 2 * index + 1, out)


def m_infty(E: IntervalUnion, t: float, max_depth: int = DEFAULT_MAX_DEPTH) -> NetMeasureResult:
    """Dyadic net measure of E at exponent t with the truncated exact recursion.

    Exact whenever E's endpoints lie on the 2^-max_depth grid (flagged);
    otherwise an upper value for the outward-snapped set.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError("t must be in (0, 1]")
    if not 0 <= max_depth <= 40:
        raise ValueError("max_depth must be in [0, 40]")
    los, his, exact = _snap_units(E, max_depth)
    if los.size == 0:
        return NetMeasureResult(0.0, (), True)
    dp = _NetDP(los, his, t, max_depth)
    value = dp.value(0, 0)
    cover: list = []
    dp.cover(0, 0, cover)
    return NetMeasureResult(value, tuple(cover), exact)


def frostman_ratio(
    E: IntervalUnion,
    t: float,
    eps: float,
    depth_range=(0, 8),
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> float:
    """min over dyadic D with level in depth_range of M_t(E cap D) / |D|^(t+eps).

    This is the best Frostman constant witnessed at those depths; it is 0
    as soon as some admissible D misses E entirely.
    """
    table = frostman_ratio_table(E, t, eps, depth_range, max_depth)
    return min(r for (_, _, r) in table) if table else math.inf


def frostman_ratio_table(
    E: IntervalUnion,
    t: float,
    eps: float,
    depth_range=(0, 8),
    max_depth: int = DEFAULT_MAX_DEPTH,
):
    """(level, index, ratio) for every dyadic D with level in depth_range."""
    if not 0.0 < t < 1.0:
        raise ValueError("t must be in (0, 1)")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    lvl_lo, lvl_hi = depth_range
    if not 0 <= lvl_lo <= lvl_hi <= max_depth:
        raise ValueError("depth_range must satisfy 0 <= lo <= hi <= max_depth")
    los, his, _ = _snap_units(E, max_depth)
    rows = []
    if los.size == 0:
        for lvl in range(lvl_lo, lvl_hi + 1):
            rows.extend((lvl, i, 0.0) for i in range(1 << lvl))
        return rows
    dp = _NetDP(los, his, t, max_depth)
    values: dict[tuple[int, int], tuple[int, float]] = {}

    def visit(level, index, cls, val):
        if level <= lvl_hi:
            values[(level, index)] = (cls, val)

    dp.value(0, 0, visit)

    def node(level, index):
        """(cls, value) with pruned descendants reconstructed in closed form."""
        if (level, index) in values:
            return values[(level, index)]
        lvl, idx = level, index
        while lvl > 0:  # walk up to the nearest visited ancestor
            lvl, idx = lvl - 1, idx >> 1
            if (lvl, idx) in values:
                cls = values[(lvl, idx)][0]
                # unvisited nodes only hang below empty or contained ancestors
                val = 0.0 if cls < 0 else dp.lengths[level]
                return cls, val
        raise AssertionError("root is always visited")

    for lvl in range(lvl_lo, lvl_hi + 1):
        price = 2.0 ** (-lvl * (t + eps))
        for i in range(1 << lvl):
            _, val = node(lvl, i)
            rows.append((lvl, i, val / price))
    return rows


@dataclass(frozen=True)
class LiminfRow:
    n: int
    ratio: float
    running_min: float


@dataclass(frozen=True)
class LiminfProbe:
    rows: tuple
    stabilized: bool
    threshold: float


def liminf_probe(
    params_sequence,
    t: float,
    eps: float,
    depth_range=(0, 6),
    threshold: float = 0.0,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> LiminfProbe:
    """Frostman ratios along an increasing-level parameter sequence.

    The stabilization flag mimics a liminf: it requires the minimum over
    the SECOND HALF of the levels to stay strictly above the threshold.
    Early levels may witness honest zeros (deep dyadic cells beyond
    1 - lam^(n+1) + radius meet nothing until n grows), which a liminf
    ignores.
    """
    params = list(params_sequence)
    if any(b.n <= a.n for a, b in zip(params, params[1:])):
        raise ValueError("levels must be strictly increasing")
    rows = []
    running = math.inf
    for p in params:
        E = build_level_set(p)
        r = frostman_ratio(E, t, eps, depth_range, max_depth)
        running = min(running, r)
        rows.append(LiminfRow(p.n, r, running))
    tail = rows[len(rows) // 2 :]
    tail_min = min(r.ratio for r in tail) if tail else math.inf
    return LiminfProbe(tuple(rows), bool(tail_min > threshold), threshold)


def probe_for_levels(lam, alpha, levels, c=1.0):
    """ExpansionParams sequence for liminf_probe."""
    return [ExpansionParams(lam, alpha, int(n), c) for n in levels]


def ratio_table_to_csv(table) -> str:
    lines = ["depth,index,ratio"]
    lines += [f"{lvl},{idx},{repr(r)}" for (lvl, idx, r) in table]
    return "\n".join(lines) + "\n"


def cover_to_json(result: NetMeasureResult) -> str:
    return json.dumps(
        {
            "value": result.value,
            "exact": result.exact,
            "optimal_cover": [[d.level, d.index] for d in result.optimal_cover],
        }
    )
