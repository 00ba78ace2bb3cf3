"""Shared oracles for the test suite.

Everything here is deliberately independent of the library code paths it
checks: brute-force enumeration, adaptive quadrature, and naive interval
arithmetic.
"""

import numpy as np


def brute_interval_merge(pairs):
    """Naive O(n^2) union of closed intervals clipped to [0, 1]."""
    pairs = [(max(0.0, a), min(1.0, b)) for a, b in pairs if min(1.0, b) > max(0.0, a)]
    out = []
    for a, b in sorted(pairs):
        placed = False
        for seg in out:
            if a <= seg[1] and b >= seg[0]:
                seg[0], seg[1] = min(seg[0], a), max(seg[1], b)
                placed = True
                break
        if not placed:
            out.append([a, b])
    # repeated passes until stable (merging can cascade)
    changed = True
    while changed:
        changed = False
        out.sort()
        for i in range(len(out) - 1):
            if out[i + 1][0] <= out[i][1]:
                out[i][1] = max(out[i][1], out[i + 1][1])
                del out[i + 1]
                changed = True
                break
    return [(a, b) for a, b in out]


def brute_net_measure(leaf_mask, t, depth):
    """Exhaustive minimum of sum |D|^t over disjoint dyadic covers.

    leaf_mask: boolean array of length 2^depth marking leaves that must be
    covered.  Enumerates covers left to right without memoisation: at the
    first uncovered needed leaf it tries the dyadic ancestor at every
    level whose left end does not overlap previously chosen intervals.
    Completely independent of the tree recursion it cross-checks.
    """
    n = len(leaf_mask)
    needed = np.flatnonzero(leaf_mask)

    def first_needed(p):
        i = np.searchsorted(needed, p)
        return None if i == len(needed) else int(needed[i])

    def rec(p):
        i = first_needed(p)
        if i is None:
            return 0.0
        best = np.inf
        for lvl in range(depth + 1):
            span = n >> lvl
            start = (i // span) * span
            if start < p:
                continue
            cost = (span / n) ** t + rec(start + span)
            if cost < best:
                best = cost
        return best

    return rec(0)


def mask_to_intervals(leaf_mask):
    """Interval union (unit scale) from a boolean leaf mask."""
    n = len(leaf_mask)
    out = []
    i = 0
    while i < n:
        if leaf_mask[i]:
            j = i
            while j < n and leaf_mask[j]:
                j += 1
            out.append((i / n, j / n))
            i = j
        else:
            i += 1
    return out


def random_atom_measure(rng, max_atoms=48):
    """Random bump measure for property tests (weights sum to 1)."""
    from frostman.expansions import PointMultiset
    from frostman.measures import AtomSmoothedMeasure

    n = int(rng.integers(2, max_atoms))
    xs = np.sort(rng.uniform(0.0, 1.0, n))
    xs += np.arange(n) * 1e-9  # enforce strictly increasing
    mult = rng.integers(1, 4, n)
    radius = float(rng.uniform(1e-4, 0.05))
    return AtomSmoothedMeasure(PointMultiset(xs, mult), radius)
