import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from conftest import random_atom_measure
from frostman.expansions import ExpansionParams, PointMultiset
from frostman.measures import AtomSmoothedMeasure, GridDensity, make_mu, to_grid
from frostman.riesz import (
    cross_energy,
    energy,
    energy_convergence_probe,
    energy_of_level,
    energy_reports_to_csv,
    grid_energy,
    pair_kernel_integral,
    potential,
    potential_floor_profile,
    potential_profile,
    truncated_tail_energy,
)


def closed_form_self(L, s):
    return 2.0 * L ** (2.0 - s) / ((1.0 - s) * (2.0 - s))


class TestPairKernel:
    def test_identical_intervals_closed_form(self):
        assert np.isclose(pair_kernel_integral((0, 1), (0, 1), 0.5), 8.0 / 3.0)
        for L, s in [(0.3, 0.25), (2.0, 0.7), (0.05, 0.5)]:
            got = pair_kernel_integral((0, L), (0, L), s)
            assert np.isclose(got, closed_form_self(L, s), rtol=1e-12)

    def test_against_quadrature(self):
        # nested adaptive quadrature with the diagonal declared as the
        # singular point of the inner integral
        cases = [((0.0, 0.4), (0.1, 0.9), 0.5), ((0.0, 0.2), (0.5, 0.7), 0.3),
                 ((0.1, 0.3), (0.25, 0.6), 0.8)]
        for i1, i2, s in cases:
            def inner(x):
                pts = [x] if i2[0] < x < i2[1] else None
                val, _ = quad(
                    lambda y: abs(x - y) ** -s if x != y else 0.0,
                    i2[0], i2[1], points=pts, limit=200,
                )
                return val

            oracle, _ = quad(inner, i1[0], i1[1], limit=200)
            assert np.isclose(pair_kernel_integral(i1, i2, s), oracle, rtol=1e-6)

    def test_far_field_series_branch(self):
        # distances beyond 4(u+v) switch to the multipole series; check the
        # two branches agree where both are accurate
        s = 0.55
        u = v = 0.01
        for d in (0.0805, 0.081, 0.12, 0.5):
            series = pair_kernel_integral((0, 2 * u), (d, d + 2 * v), s)
            oracle, _ = dblquad(
                lambda y, x: abs(x - y) ** -s, 0, 2 * u, lambda x: d, lambda x: d + 2 * v
            )
            assert np.isclose(series, oracle, rtol=1e-9)

    def test_disjoint_distance_bound(self):
        val = pair_kernel_integral((0.0, 0.1), (0.5, 0.7), 0.5)
        assert val <= 0.1 * 0.2 * 0.4**-0.5 + 1e-12

    def test_translation_invariance(self):
        a = pair_kernel_integral((0.0, 0.25), (0.5, 0.8), 0.6)
        b = pair_kernel_integral((0.13, 0.38), (0.63, 0.93), 0.6)
        assert np.isclose(a, b, rtol=1e-12)

    def test_rejects_bad_exponent(self):
        with pytest.raises(ValueError):
            pair_kernel_integral((0, 1), (0, 1), 1.0)


class TestEnergy:
    def test_dyadic_alpha_one_tends_to_uniform_energy(self):
        vals = [energy_of_level(ExpansionParams(0.5, 1.0, k), 0.5).value for k in (8, 12)]
        assert abs(vals[1] - 8.0 / 3.0) < abs(vals[0] - 8.0 / 3.0)
        assert abs(vals[1] - 8.0 / 3.0) / (8.0 / 3.0) < 0.01

    def test_small_s_limit_is_squared_mass(self):
        mu = make_mu(ExpansionParams(0.6, 1.5, 5))
        e = [energy(mu, s).value for s in (0.3, 0.1, 0.02)]
        assert e[0] > e[1] > e[2] > 1.0
        assert e[2] - 1.0 < 0.05

    def test_single_atom_matches_pair_kernel(self):
        r = 0.125
        mu = AtomSmoothedMeasure(PointMultiset([0.5], [1]), r)
        want = pair_kernel_integral((0, 2 * r), (0, 2 * r), 0.5) / (2 * r) ** 2
        assert np.isclose(energy(mu, 0.5).value, want, rtol=1e-12)

    def test_reflection_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            mu = random_atom_measure(rng)
            x = np.sort(1.0 - mu.centers.values)
            ref = AtomSmoothedMeasure(
                PointMultiset(x, mu.centers.multiplicities[::-1]), mu.radius
            )
            assert np.isclose(energy(mu, 0.45).value, energy(ref, 0.45).value, rtol=1e-10)

    def test_cross_energy_symmetry_and_diagonal(self):
        rng = np.random.default_rng(9)
        for _ in range(8):
            mu, nu = random_atom_measure(rng), random_atom_measure(rng)
            s = float(rng.uniform(0.2, 0.8))
            assert np.isclose(
                cross_energy(mu, nu, s), cross_energy(nu, mu, s), rtol=1e-10
            )
            assert np.isclose(cross_energy(mu, mu, s), energy(mu, s).value, rtol=1e-10)

    def test_mixture_against_reassembled_measure(self):
        s = 0.5
        m1 = AtomSmoothedMeasure(PointMultiset([0.2, 0.4], [1, 1]), 0.05)
        m2 = AtomSmoothedMeasure(PointMultiset([0.6, 0.9], [1, 2]), 0.05)
        p = 0.25
        whole_x = np.array([0.2, 0.4, 0.6, 0.9])
        whole_w = np.array([p / 2, p / 2, (1 - p) / 3, 2 * (1 - p) / 3])
        total = 0.0
        L = 0.1
        for i in range(4):
            for j in range(4):
                total += whole_w[i] * whole_w[j] * pair_kernel_integral(
                    (whole_x[i] - 0.05, whole_x[i] + 0.05),
                    (whole_x[j] - 0.05, whole_x[j] + 0.05),
                    s,
                ) / L**2
        expanded = (
            p * p * energy(m1, s).value
            + (1 - p) ** 2 * energy(m2, s).value
            + 2 * p * (1 - p) * cross_energy(m1, m2, s)
        )
        assert np.isclose(total, expanded, rtol=1e-10)

    def test_grid_energy_agrees_with_pairwise(self):
        p = ExpansionParams(0.6, 1.5, 8)
        mu = make_mu(p)
        exact = energy(mu, 0.5).value
        g = to_grid(mu, 2**16)
        approx = grid_energy(g, 0.5).value
        assert abs(approx - exact) / exact < 0.005

    def test_csv_roundtrip_header(self):
        rep = energy_of_level(ExpansionParams(0.5, 1.0, 3), 0.5)
        text = energy_reports_to_csv([rep])
        assert text.splitlines()[0] == "lambda,alpha,k,s,method,value,truncation"
        assert "pairwise_exact" in text.splitlines()[1]


class TestPotential:
    def test_uniform_closed_form(self):
        g = GridDensity(np.ones(2048))
        for s in (0.3, 0.5, 0.8):
            for x in (0.1, 0.5, 0.73):
                want = (x ** (1 - s) + (1 - x) ** (1 - s)) / (1 - s)
                assert np.isclose(potential(g, s, x), want, rtol=1e-9)
                oracle, _ = quad(lambda y: abs(x - y) ** -s, 0, 1, points=[x])
                assert np.isclose(potential(g, s, x), oracle, rtol=1e-7)

    def test_indicator_bounds_inside(self):
        # for x in V: |V|^(1-s)/(1-s) <= R_s chi_V(x) <= 2^s |V|^(1-s)/(1-s)
        m = 1024
        v = np.zeros(m)
        v[256:512] = 1.0  # V = [0.25, 0.5]
        g = GridDensity(v)
        L = 0.25
        for s in (0.4, 0.6):
            lo = L ** (1 - s) / (1 - s)
            hi = 2**s * L ** (1 - s) / (1 - s)
            xs = np.linspace(0.2501, 0.4999, 37)
            vals = potential(g, s, xs)
            assert np.all(vals >= lo - 1e-10)
            assert np.all(vals <= hi + 1e-10)

    def test_indicator_bound_outside(self):
        # for x outside V: R_s chi_V(x) >= d^-s |V| with d the sup distance
        m = 512
        v = np.zeros(m)
        v[128:256] = 1.0  # V = [0.25, 0.5]
        g = GridDensity(v)
        for x in (0.6, 0.9, 0.1):
            d = max(abs(x - 0.25), abs(x - 0.5))
            for s in (0.3, 0.7):
                assert potential(g, s, x) >= d**-s * 0.25 - 1e-12

    def test_profile_matches_pointwise(self):
        rng = np.random.default_rng(4)
        g = GridDensity(rng.uniform(0, 2, 512))
        prof = potential_profile(g, 0.55)
        mids = (np.arange(512) + 0.5) / 512
        direct = potential(g, 0.55, mids)
        assert np.allclose(prof, direct, rtol=1e-9, atol=1e-12)

    def test_floor_profile_is_lower_bound(self):
        rng = np.random.default_rng(8)
        g = GridDensity(rng.uniform(0, 1, 256) * (rng.uniform(0, 1, 256) < 0.6))
        s = 0.5
        floor = potential_floor_profile(g, s)
        # sample many points inside each cell
        for frac in (0.01, 0.37, 0.5, 0.77, 0.99):
            xs = (np.arange(256) + frac) / 256
            vals = potential(g, s, xs)
            assert np.all(vals >= floor - 1e-12)


class TestTruncatedTail:
    def test_vanishes_as_m_grows(self):
        mu = make_mu(ExpansionParams(0.6, 1.5, 6))
        tails = [truncated_tail_energy(mu, 0.3, 0.6, m) for m in (10, 1e3, 1e6)]
        assert tails[0] > tails[1] > tails[2]
        assert tails[2] < 1e-3

    def test_tail_bound_randomised(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            mu = random_atom_measure(rng)
            for (t, s, m) in [(0.3, 0.6, 10), (0.5, 0.8, 100), (0.3, 0.8, 1000)]:
                tail = truncated_tail_energy(mu, t, s, m)
                cap = energy(mu, s).value * (s / (s - t)) * m ** (t / s - 1.0)
                assert tail <= cap * (1 + 1e-9)

    def test_small_t_mass_bound(self):
        # as t -> 0 the tail approaches the product-measure of the domain,
        # which is below energy(s)/m
        rng = np.random.default_rng(22)
        for _ in range(10):
            mu = random_atom_measure(rng)
            s, m = 0.7, 50.0
            tail = truncated_tail_energy(mu, 1e-6, s, m)
            assert tail <= energy(mu, s).value / m * (1 + 1e-6)


class TestConvergenceProbe:
    def test_dyadic_limit_closed_form(self):
        probe = energy_convergence_probe(0.5, 1.0, 0.4, 0.6, [4, 6, 8], grid_m=2**12, depth=20)
        want = 2.0 / ((1 - 0.4) * (2 - 0.4))
        assert abs(probe.limit_value - want) / want < 1e-3

    def test_deviations_decrease(self):
        probe = energy_convergence_probe(0.6, 1.5, 0.4, 0.6, [4, 6, 8, 10], grid_m=2**14)
        devs = [abs(r.value - probe.limit_value) for r in probe.reports]
        assert devs[-1] < devs[0]
        assert probe.max_tail_deviation <= max(devs[2:]) + 1e-15

    def test_reordering_permutes_rows(self):
        a = energy_convergence_probe(0.6, 1.5, 0.3, 0.5, [4, 6], grid_m=2**10, depth=10)
        b = energy_convergence_probe(0.6, 1.5, 0.3, 0.5, [6, 4], grid_m=2**10, depth=10)
        assert a.reports[0].value == b.reports[1].value
        assert a.reports[1].value == b.reports[0].value

    def test_requires_t_below_s(self):
        with pytest.raises(ValueError):
            energy_convergence_probe(0.6, 1.5, 0.6, 0.5, [4])
