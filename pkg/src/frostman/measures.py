"""Smoothed atomic measures, grid densities and the self-similar fixed point.

The level-k measure is an equal-weight sum of uniform bumps,

    mu = 2^-(k+1) * sum_{codes a} Uniform(B_r(x_a)),   r = c * 2^(-alpha*k),

over the 2^(k+1) expansion values x_a (coinciding values simply add
weight).  Bumps near 0 and 1 may overhang [0, 1]; the measure itself is
kept exact (mass 1) and only grid renderings clip to [0, 1].

As k grows these measures converge weakly to the self-similar measure of
the maps S1: x -> lam*x and S2: x -> lam*x + 1 - lam, whose density h
solves

    h = (1/(2*lam)) * (h o S1^-1  +  h o S2^-1),

equivalently mu(I) = mu(S1^-1 I)/2 + mu(S2^-1 I)/2 for every interval.
The fixed point is computed by iterating the measure form on a uniform
grid: a piecewise-constant density has a piecewise-linear CDF, so the
pushforward under an affine map followed by cell-averaging is exact
(linear interpolation of the CDF at mapped cell edges).

Conventions:
    * GridDensity stores a density (not masses) on m equal cells of
      [0, 1]; mass of a cell is value/m.
    * All constructors are pure; grids are treated as immutable value
      objects and are safe to share across parallel parameter sweeps.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CertificationError
from .expansions import ExpansionParams, IntervalUnion, PointMultiset, enumerate_points

GRID_MAGIC = b"GRD1"


def _is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


class GridDensity:
    """Piecewise-constant density on a uniform power-of-two partition of [0,1]."""

    __slots__ = ("values", "undersampled")

    def __init__(self, values, undersampled: bool = False):
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or not _is_power_of_two(v.size):
            raise ValueError("resolution must be a power of two")
        if np.any(v < -1e-15):
            raise ValueError("density values must be nonnegative")
        self.values = np.maximum(v, 0.0)
        # set when a rendering could not resolve the bump radius
        self.undersampled = bool(undersampled)

    @property
    def resolution(self) -> int:
        return self.values.size

    @property
    def mass(self) -> float:
        return float(self.values.sum() / self.resolution)

    def cdf_nodes(self) -> np.ndarray:
        """Cumulative mass at the m+1 cell edges (piecewise-linear CDF)."""
        out = np.empty(self.resolution + 1)
        out[0] = 0.0
        np.cumsum(self.values / self.resolution, out=out[1:])
        return out

    def measure(self, left, right) -> np.ndarray | float:
        """Exact mass of [left, right] (arrays broadcast)."""
        P = self.cdf_nodes()
        m = self.resolution
        x0 = np.clip(np.asarray(left, dtype=float), 0.0, 1.0) * m
        x1 = np.clip(np.asarray(right, dtype=float), 0.0, 1.0) * m
        grid = np.arange(m + 1)
        return np.interp(x1, grid, P) - np.interp(x0, grid, P)

    def l1_l2_on(self, left: float, right: float) -> tuple[float, float]:
        """(||h chi_I||_1, ||h chi_I||_2^2) for I = [left, right], exact for cells."""
        m = self.resolution
        a = min(max(left, 0.0), 1.0) * m
        b = min(max(right, 0.0), 1.0) * m
        if b <= a:
            return 0.0, 0.0
        ia, ib = int(np.floor(a)), int(np.ceil(b))
        ib = min(ib, m)
        v = self.values[ia:ib]
        frac = np.ones(ib - ia)
        if ib - ia == 1:
            frac[0] = b - a
        else:
            frac[0] = ia + 1 - a
            frac[-1] = b - (ib - 1)
        return float(np.dot(v, frac) / m), float(np.dot(v * v, frac) / m)

    # -- serialisation ----------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell_index", "density"])
        for i, v in enumerate(self.values):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridDensity":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["cell_index", "density"]:
            raise ValueError("expected header 'cell_index,density'")
        return cls(np.array([float(r[1]) for r in rows[1:]]))

    def to_binary(self) -> bytes:
        head = GRID_MAGIC + struct.pack("<I", self.resolution)
        return head + self.values.astype("<f8").tobytes()

    @classmethod
    def from_binary(cls, blob: bytes) -> "GridDensity":
        if blob[:4] != GRID_MAGIC:
            raise ValueError("bad magic, expected GRD1")
        (m,) = struct.unpack("<I", blob[4:8])
        vals = np.frombuffer(blob[8 : 8 + 8 * m], dtype="<f8")
        return cls(vals.copy())


@dataclass(frozen=True)
class AtomSmoothedMeasure:
    """Equal-radius uniform bumps at weighted centers (mass = total_mass)."""

    centers: PointMultiset
    radius: float
    total_mass: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def weights(self) -> np.ndarray:
        m = self.centers.multiplicities
        return self.total_mass * m / m.sum()

    def support(self) -> IntervalUnion:
        """Support clipped to [0, 1] (bumps may overhang the ends)."""
        return IntervalUnion.from_balls(self.centers.values, self.radius)

    def measure(self, left, right) -> np.ndarray | float:
        """Exact mass of [left, right]; overhanging parts count where they lie."""
        x = self.centers.values
        w = self.weights
        a = np.asarray(left, dtype=float)[..., None]
        b = np.asarray(right, dtype=float)[..., None]
        lo = x - self.radius
        hi = x + self.radius
        overlap = np.clip(np.minimum(b, hi) - np.maximum(a, lo), 0.0, None)
        out = (overlap / (2 * self.radius) * w).sum(axis=-1)
        return float(out) if out.ndim == 0 else out


def make_mu(params: ExpansionParams, snap_tol: float | None = None) -> AtomSmoothedMeasure:
    """Probability measure of uniform bumps on the level-n expansion points.

    Every code carries weight 2^-(n+1); merged centers keep the summed
    weight, so the measure does not depend on the merge tolerance.
    """
    kw = {} if snap_tol is None else {"snap_tol": snap_tol}
    pts = enumerate_points(params, **kw)
    return AtomSmoothedMeasure(pts, params.radius, 1.0)


def to_grid(mu: AtomSmoothedMeasure, m: int) -> GridDensity:
    """Exact cell-averaged rendering of mu on [0, 1].

    Each bump contributes its exact overlap length with every cell; mass
    overhanging [0, 1] is lost by clipping (reported by comparing
    grid.mass with mu.total_mass).  A resolution coarser than the bump
    radius sets the `undersampled` flag instead of failing.
    """
    if m < 2:
        raise ValueError("resolution must be at least 2")
    x = mu.centers.values
    w = mu.weights
    r = mu.radius
    dens = w / (2 * r)  # bump height
    a = x - r
    b = x + r
    cells = np.zeros(m + 2)  # guard cells for clipped indices
    ia = np.clip(np.floor(a * m).astype(np.int64), -1, m)
    ib = np.clip(np.floor(b * m).astype(np.int64), -1, m)
    edges_a = (ia + 1) / m
    edges_b = ib / m
    same = ia == ib
    # single-cell bumps
    np.add.at(cells, ia[same] + 1, dens[same] * (b[same] - a[same]))
    d = ~same
    # left partial, right partial, full interior cells via a difference array
    np.add.at(cells, ia[d] + 1, dens[d] * (edges_a[d] - a[d]))
    np.add.at(cells, ib[d] + 1, dens[d] * (b[d] - edges_b[d]))
    diff = np.zeros(m + 3)
    np.add.at(diff, ia[d] + 2, dens[d] / m)
    np.add.at(diff, ib[d] + 1, -dens[d] / m)
    cells += np.cumsum(diff)[: m + 2]
    masses = cells[1 : m + 1]
    return GridDensity(masses * m, undersampled=(1.0 / m) > r)


def restrict(g: GridDensity, interval: tuple[float, float]) -> GridDensity:
    """Density zeroed outside [left, right]; boundary cells scaled by overlap.

    Mass of the result equals g.measure(left, right) exactly.
    """
    left, right = interval
    m = g.resolution
    edges = np.arange(m + 1) / m
    overlap = np.clip(
        np.minimum(edges[1:], right) - np.maximum(edges[:-1], left), 0.0, 1.0 / m
    )
    return GridDensity(g.values * overlap * m)


# -- self-similar fixed point ---------------------------------------------


def pushforward_affine(g: GridDensity, scale: float, offset: float) -> GridDensity:
    """Exact cell-averaged pushforward of g under x -> scale*x + offset.

    scale must be positive; mass landing outside [0, 1] is dropped.  Exact
    because the CDF of a piecewise-constant density is piecewise linear.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    m = g.resolution
    P = g.cdf_nodes()
    edges = np.arange(m + 1) / m
    pre = (edges - offset) / scale  # preimages of the target cell edges
    newP = np.interp(pre * m, np.arange(m + 1), P, left=0.0, right=P[-1])
    return GridDensity(np.diff(newP) * m)


def functional_equation_step(g: GridDensity, lam: float) -> GridDensity:
    """One application of h -> (h o S1^-1 + h o S2^-1) / (2 lam), mass-exact."""
    g1 = pushforward_affine(g, lam, 0.0)
    g2 = pushforward_affine(g, lam, 1.0 - lam)
    return GridDensity(0.5 * (g1.values + g2.values))


def iterate_functional_equation(lam: float, depth: int = 40, m: int = 2**16) -> GridDensity:
    """Fixed-point iteration from the uniform density toward h_lam.

    Each step preserves mass exactly; the iterates are the cell-averaged
    laws of (1-lam) * sum_{j<depth} a_j lam^j + lam^depth * U with U
    uniform, so they converge geometrically (rate lam) in distribution.
    """
    if not 0.5 <= lam < 1.0:
        raise ValueError("lam must be in [1/2, 1)")
    g = GridDensity(np.ones(m))
    for _ in range(depth):
        g = functional_equation_step(g, lam)
    return g


def functional_equation_residual(g: GridDensity, lam: float) -> float:
    """L1 distance between g and one more iteration step."""
    step = functional_equation_step(g, lam)
    return float(np.abs(step.values - g.values).sum() / g.resolution)


def measure_form_defect(g: GridDensity, lam: float, intervals) -> float:
    """max over I of |mu(I) - mu(S1^-1 I)/2 - mu(S2^-1 I)/2| for mu = g dx."""
    worst = 0.0
    for a, b in intervals:
        lhs = g.measure(a, b)
        rhs = 0.5 * g.measure(a / lam, b / lam)
        rhs += 0.5 * g.measure((a - (1 - lam)) / lam, (b - (1 - lam)) / lam)
        worst = max(worst, abs(lhs - rhs))
    return worst


# -- convolution-squared measures ------------------------------------------


def convolution_squared_atoms(lam: float, alpha: float, k: int, c: float = 0.25):
    """Centers, weights and kernel geometry of the level-(2k+1) convolution square.

    The measure is the law of (X + lam*Y) / (1 + lam) with X, Y independent
    level-k measures at parameters (2*alpha, lam^2, c).  Its atoms are then
    exactly level-(2k+1) expansion values of lam (even digits from X, odd
    from Y) and its smoothing kernel is the trapezoid obtained from
    (U + lam*U') / (1 + lam) with U, U' uniform on [-rho, rho],
    rho = c * 2^(-2*alpha*k): flat on [-w, w] with w = rho*(1-lam)/(1+lam)
    and linear shoulders out to +-rho.

    Returns (centers, weights, rho, w); centers are sorted, weights summed
    over coinciding pairs.
    """
    if not 0.5 < lam * lam < 1.0:
        raise ValueError("lam^2 must lie in (1/2, 1)")
    inner = ExpansionParams(lam * lam, 1.0, k, 1.0)  # alpha unused for points
    pts = enumerate_points(inner)
    x = np.repeat(pts.values, pts.multiplicities)
    pair_sum = (x[:, None] + lam * x[None, :]).ravel() / (1.0 + lam)
    pair_sum.sort()
    w = np.full(pair_sum.size, 1.0 / pair_sum.size)
    rho = c * 2.0 ** (-2.0 * alpha * k)
    flat = rho * (1.0 - lam) / (1.0 + lam)
    return pair_sum, w, rho, flat


def _trapezoid_cdf(t: np.ndarray, rho: float, flat: float) -> np.ndarray:
    """CDF of the symmetric trapezoid kernel on [-rho, rho] at points t."""
    t = np.clip(t, -rho, rho)
    # density: 1/(rho+flat) on |u|<=flat, linear down to 0 at |u|=rho
    h = 1.0 / (rho + flat)
    out = np.empty_like(t)
    slope_w = rho - flat
    left = t < -flat
    mid = (t >= -flat) & (t <= flat)
    right = t > flat
    if slope_w > 0:
        out[left] = 0.5 * h * (t[left] + rho) ** 2 / slope_w
        out[right] = 1.0 - 0.5 * h * (rho - t[right]) ** 2 / slope_w
    else:  # rectangle limit (lam -> 0 cannot happen here, but keep exact)
        out[left] = 0.0
        out[right] = 1.0
    out[mid] = 0.5 * h * slope_w + h * (t[mid] + flat)
    return out


def convolve_squared(
    lam: float,
    alpha: float,
    k: int,
    c: float = 0.25,
    m: int = 2**14,
    support_tol: float = 1e-9,
) -> GridDensity:
    """Grid density of the convolution-squared measure at level 2k+1.

    Exact cell averaging of the trapezoid bumps (no spectral shortcut, so
    no circular aliasing).  The smoothing radius in units of the
    level-(2k+1) ball radius is c * 2^alpha, so containment in the
    standard neighbourhood needs c <= 2^-alpha (the default 1/4 covers
    every alpha <= 2); a violation raises CertificationError.
    """
    centers, w, rho, flat = convolution_squared_atoms(lam, alpha, k, c)
    allowed_radius = 2.0 ** (-alpha * (2 * k + 1))
    target = enumerate_points(ExpansionParams(lam, 1.0, 2 * k + 1, 1.0))
    idx = np.clip(np.searchsorted(target.values, centers), 1, len(target) - 1)
    nearest = np.minimum(
        np.abs(centers - target.values[idx - 1]), np.abs(centers - target.values[idx])
    )
    if nearest.max() > support_tol or rho > allowed_radius * (1 + 1e-12):
        raise CertificationError(
            "convolution-squared support escapes the level-(2k+1) ball union "
            f"(worst center offset {nearest.max():.3e}, rho={rho:.3e}, "
            f"allowed={allowed_radius:.3e}); decrease c (need c <= 2^-alpha)"
        )
    edges = np.arange(m + 1) / m
    masses = np.zeros(m)
    block = max(1, int(2e6 / max(rho * m * 2 + 3, 1)))
    for i0 in range(0, centers.size, block):
        cen = centers[i0 : i0 + block]
        ww = w[i0 : i0 + block]
        lo = np.clip(np.floor((cen - rho) * m).astype(np.int64), 0, m)
        hi = np.clip(np.ceil((cen + rho) * m).astype(np.int64), 0, m)
        span = int((hi - lo).max()) if cen.size else 0
        offs = np.arange(span + 1)
        cols = lo[:, None] + offs[None, :]
        take = cols <= hi[:, None]
        t = edges[np.minimum(cols, m)] - cen[:, None]
        cdf = _trapezoid_cdf(t, rho, flat)
        cell_mass = np.diff(cdf, axis=1) * ww[:, None]
        cell_mass[~take[:, 1:]] = 0.0
        np.add.at(masses, np.clip(cols[:, :-1], 0, m - 1), cell_mass)
    return GridDensity(masses * m)
