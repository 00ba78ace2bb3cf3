"""Numerical toolkit for Frostman-type large-intersection criteria.

Builds the level sets, smoothed measures, Riesz energies, dyadic net
measures, potential reweightings and Fourier-side moment integrals of the
binary lambda-expansion limsup construction, and verifies the inequalities
tying them together at desk scale.
"""

from .errors import CertificationError, ConfigError
from .expansions import (
    ExpansionParams,
    IntervalUnion,
    PointMultiset,
    build_level_set,
    enumerate_points,
    intersect,
    union_measure,
)
from .fourier import (
    FourierMomentReport,
    constant_cs,
    cosine_product,
    energy_via_fourier,
    eta_cutoff,
    fourth_moment,
    g_majorant,
    hhat_modulus,
)
from .measures import (
    AtomSmoothedMeasure,
    GridDensity,
    convolve_squared,
    iterate_functional_equation,
    make_mu,
    pushforward_affine,
    restrict,
    to_grid,
)
from .netmeasure import (
    DyadicInterval,
    NetMeasureResult,
    frostman_ratio,
    frostman_ratio_table,
    liminf_probe,
    m_infty,
)
from .riesz import (
    EnergyReport,
    cross_energy,
    energy,
    energy_convergence_probe,
    energy_of_level,
    grid_energy,
    pair_kernel_integral,
    potential,
    potential_profile,
    truncated_tail_energy,
)
from .sweep import SweepConfig, SweepRow, emit_report, run_sweep
from .transform import (
    NuMeasure,
    bounded_ratio,
    build_nu,
    endpoint_selfsimilarity,
    l2_condition,
    low_discrepancy_intervals,
    nu_interval_bound,
    theta_scaling,
)

__version__ = "0.1.0"
