"""Potential-reweighted measures and the L2 interval estimates they rest on.

Given a grid density h and an interval I, the reweighted probability
measure has density proportional to h / R_t(h|_I) on I and zero outside;
its interval bounds witness the Frostman condition.  The chain of
inequalities behind it is checked term by term:

    (1/|U|^s) int_U h / R_s(h|_I) dx <= 1          (bounded potential ratio)
    int_I (R_t h|_I)^-1 h dx >= mass(I)^2 / int_I R_t(h|_I) h dx   (Jensen)
    int_I R_t(h|_I) h dx <= (2/(1-t)) |I|^(1-t) ||h chi_I||_2^2    (Young)
    |I|^(1+eps) ||h chi_I||_2^2 <= C_eps ||h chi_I||_1^2           (L2 condition)

The first bound is certified: the potential in the denominator is
replaced by a rigorous per-cell lower bound, so the reported ratio is an
upper estimate of the true integral and the "<= 1" assertion cannot pass
by discretisation accident.

Endpoint behaviour of the self-similar density is probed through
g(r) = r ||h chi_[0,r)||_2^2 / ||h chi_[0,r)||_1^2, which the functional
equation forces to satisfy g(lam * r) = g(r) for r < (1-lam)/lam, and
through the endpoint scaling mass([0, lam^k (1-lam))) = const * 2^-k.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .measures import GridDensity, restrict
from .riesz import pair_kernel_integral, potential_floor_profile, potential_profile

_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class NuMeasure:
    """Probability measure with density h / R_t(h|_I), restricted to I."""

    base: GridDensity
    interval: tuple[float, float]
    t: float
    normalizer: float  # int_I (R_t h|_I)^-1 h dx before normalisation

    def measure(self, left, right):
        return self.base.measure(left, right)


def build_nu(g: GridDensity, interval, t: float) -> NuMeasure:
    """Reweight g by the inverse potential of its restriction to I.

    Cells where h vanishes stay zero; where h > 0 the restricted potential
    is strictly positive, so the quotient is well defined (asserted).
    """
    if not 0.0 < t < 1.0:
        raise ValueError("t must be in (0, 1)")
    a, b = interval
    hI = restrict(g, (a, b))
    if hI.mass <= 0:
        raise ValueError("the density carries no mass on I")
    R = potential_profile(hI, t)
    pos = hI.values > 0
    assert np.all(R[pos] > 0), "positive kernel: R_t(h|_I) > 0 wherever h|_I > 0"
    dens = np.zeros_like(hI.values)
    dens[pos] = hI.values[pos] / R[pos]
    Z = dens.sum() / hI.resolution
    return NuMeasure(GridDensity(dens / Z), (a, b), t, Z)


def nu_interval_bound(nu: NuMeasure, eps: float, sample_intervals) -> tuple[float, tuple]:
    """Witnessed constant  max_U nu(U) * |I|^(t+eps) / |U|^t  over U subset I.

    Returns (constant, maximizing interval) for debuggability.
    """
    a, b = nu.interval
    best, arg = 0.0, (a, b)
    scale = (b - a) ** (nu.t + eps)
    for u0, u1 in sample_intervals:
        u0, u1 = max(u0, a), min(u1, b)
        if u1 <= u0:
            continue
        val = float(nu.measure(u0, u1)) * scale / (u1 - u0) ** nu.t
        if val > best:
            best, arg = val, (u0, u1)
    return best, arg


def bounded_ratio(h: GridDensity, interval_I, interval_U, s: float, refine: int = 4) -> float:
    """Certified upper bound of (1/|U|^s) int_U h / R_s(h|_I) dx.

    The potential is bounded below per cell (see potential_floor_profile),
    so the returned value dominates the true ratio; the bound tightens as
    refine grows.  Raises if h vanishes a.e. on I, matching the proviso of
    the underlying estimate.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must be in (0, 1)")
    a, b = interval_I
    u0, u1 = interval_U
    if not (a <= u0 < u1 <= b):
        raise ValueError("need U inside I")
    fine = GridDensity(np.repeat(h.values, refine))
    hI = restrict(fine, (a, b))
    if hI.mass <= 0:
        raise ValueError("h vanishes a.e. on I")
    floor = potential_floor_profile(hI, s)
    m = fine.resolution
    edges = np.arange(m + 1) / m
    overlap = np.clip(np.minimum(edges[1:], u1) - np.maximum(edges[:-1], u0), 0.0, None)
    pos = (hI.values > 0) & (overlap > 0)
    total = float(np.sum(hI.values[pos] / floor[pos] * overlap[pos]))
    return total / (u1 - u0) ** s


def l2_condition(h: GridDensity, eps: float, intervals) -> tuple[float, tuple]:
    """Witnessed C = max_I |I|^(1+eps) ||h chi_I||_2^2 / ||h chi_I||_1^2.

    Intervals with vanishing mass are skipped.  Returns (C, argmax).
    """
    best, arg = 0.0, (0.0, 1.0)
    for a, b in intervals:
        l1, l2sq = h.l1_l2_on(a, b)
        if l1 <= 0:
            continue
        val = (b - a) ** (1.0 + eps) * l2sq / l1**2
        if val > best:
            best, arg = val, (a, b)
    return best, arg


def low_discrepancy_intervals(
    count: int, min_length: float = 1e-4, endpoint_radii=None, start: int = 1
):
    """Deterministic (center, length) stream plus endpoint-anchored intervals.

    Golden-ratio rotations fill the (center, length) square uniformly
    (`start` offsets the rotation index, standing in for a seed); the
    endpoint-anchored family [0, r) and (1-r, 1] at geometric radii is
    appended because that is where the endpoint scaling of self-similar
    densities concentrates the difficulty.
    """
    out = [(0.0, 1.0)]
    if endpoint_radii is None:
        endpoint_radii = [2.0**-j for j in range(1, 16)]
    for r in endpoint_radii:
        out.append((0.0, r))
        out.append((1.0 - r, 1.0))
    for i in range(start, start + count):
        c = (i * _PHI) % 1.0
        half = 0.5 * (min_length + ((i * _PHI * _PHI) % 1.0) * (1.0 - min_length))
        a, b = max(0.0, c - half), min(1.0, c + half)
        if b - a >= min_length:
            out.append((a, b))
    return out


def restricted_energy(h: GridDensity, interval, t: float) -> float:
    """Exact int_I R_t(h|_I) h dx = II_{IxI} |x-y|^(-t) h(x) h(y) dx dy.

    Cell-pair exact via the closed-form kernel integrals (Toeplitz sum);
    used as the left side of the Young-inequality check.
    """
    hI = restrict(h, interval)
    v = hI.values
    m = h.resolution
    delta = 1.0 / m
    from .riesz import _pair_integral_arrays  # shared exact cell kernel

    T = _pair_integral_arrays(np.arange(m) * delta, delta / 2, delta / 2, t)
    n = 2 * m
    fv = np.fft.rfft(v, n)
    corr = np.fft.irfft(fv * np.conj(fv), n)[:m]
    return float(T[0] * corr[0] + 2.0 * np.dot(T[1:], corr[1:]))


def jensen_lower_bound_holds(h: GridDensity, interval, t: float) -> tuple[bool, float, float]:
    """Check int_I (R_t h|_I)^-1 h >= mass(I)^2 / int_I (R_t h|_I) h.

    Both sides share the same per-cell potential values, so the inequality
    is discrete Jensen and must hold up to rounding; returned as
    (holds, lhs, rhs) for reporting.
    """
    hI = restrict(h, interval)
    if hI.mass <= 0:
        raise ValueError("no mass on I")
    R = potential_profile(hI, t)
    m = hI.resolution
    pos = hI.values > 0
    lhs = float(np.sum(hI.values[pos] / R[pos]) / m)
    forward = float(np.sum(hI.values[pos] * R[pos]) / m)
    rhs = hI.mass**2 / forward
    return bool(lhs >= rhs * (1.0 - 1e-12)), lhs, rhs


def young_upper_bound_holds(h: GridDensity, interval, t: float) -> tuple[bool, float, float]:
    """Check int_I R_t(h|_I) h dx <= (2/(1-t)) |I|^(1-t) ||h chi_I||_2^2 exactly."""
    a, b = interval
    lhs = restricted_energy(h, interval, t)
    _, l2sq = h.l1_l2_on(a, b)
    rhs = 2.0 / (1.0 - t) * (b - a) ** (1.0 - t) * l2sq
    return bool(lhs <= rhs * (1.0 + 1e-12)), lhs, rhs


# -- endpoint self-similarity -------------------------------------------------


def endpoint_ratio(h: GridDensity, r: float) -> float:
    """g(r) = r ||h chi_[0,r)||_2^2 / ||h chi_[0,r)||_1^2."""
    l1, l2sq = h.l1_l2_on(0.0, r)
    if l1 <= 0:
        raise ValueError("no mass on [0, r)")
    return r * l2sq / l1**2


@dataclass(frozen=True)
class SelfSimilarityRow:
    r: float
    g_r: float
    g_lam_r: float
    rel_deviation: float


def endpoint_selfsimilarity(h: GridDensity, lam: float, r_list) -> tuple[tuple, float]:
    """g(r) versus g(lam*r) per radius; returns (rows, max relative deviation).

    Radii must satisfy r < (1-lam)/lam so that the reflected preimage of
    [0, lam*r] misses [0, 1] and the scaling identity applies.
    """
    limit = (1.0 - lam) / lam
    rows = []
    worst = 0.0
    for r in r_list:
        if not 0.0 < r < limit:
            raise ValueError(f"radius {r} outside the admissible range (0, {limit})")
        gr = endpoint_ratio(h, r)
        glr = endpoint_ratio(h, lam * r)
        dev = abs(glr - gr) / gr
        worst = max(worst, dev)
        rows.append(SelfSimilarityRow(r, gr, glr, dev))
    return tuple(rows), worst


@dataclass(frozen=True)
class ThetaScalingResult:
    theta: float
    radii: tuple
    masses: tuple
    vk_ratios: tuple  # mass(V_k)/mass(V_0) for V_k = [0, lam^k (1-lam))
    fitted_exponent: float
    min_window_mass: float  # witnessed minimal mass of length-(2 lam - 1) intervals


def theta_scaling(h: GridDensity, lam: float, k_max: int = 8, fit_points: int = 33) -> ThetaScalingResult:
    """Endpoint scaling table of mu([0, r)) with the exact dyadic-ratio check.

    theta = -log 2 / log lam; masses at the anchor radii lam^k (1 - lam)
    halve exactly for the true self-similar measure, and a log-log fit
    over [lam^k_max (1-lam), 1-lam] estimates the exponent.
    """
    if not 0.5 <= lam < 1.0:
        raise ValueError("lam must be in [1/2, 1)")
    theta = -math.log(2.0) / math.log(lam)
    base = 1.0 - lam
    vk = np.array([float(h.measure(0.0, base * lam**k)) for k in range(k_max + 1)])
    ratios = tuple(vk / vk[0])
    radii = base * lam ** np.linspace(0.0, float(k_max), fit_points)
    masses = np.array([float(h.measure(0.0, r)) for r in radii])
    slope = np.polyfit(np.log(radii), np.log(masses), 1)[0]
    window = 2.0 * lam - 1.0
    if window > 0:
        starts = np.linspace(0.0, 1.0 - window, 512)
        min_mass = float(np.min(h.measure(starts, starts + window)))
    else:
        min_mass = float("nan")
    return ThetaScalingResult(
        theta, tuple(radii), tuple(masses), ratios, float(slope), min_mass
    )


def witness_to_csv(samples_and_values) -> str:
    lines = ["interval_left,interval_right,witness_value"]
    lines += [f"{repr(a)},{repr(b)},{repr(v)}" for (a, b), v in samples_and_values]
    return "\n".join(lines) + "\n"


def witness_summary_json(best: float, argmax, count: int) -> str:
    return json.dumps(
        {"max": best, "argmax": list(argmax), "sample_count": count}
    )
