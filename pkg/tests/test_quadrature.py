import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from husimi_tomo.errors import NumericError
from husimi_tomo.quadrature import (
    QuadratureSample,
    QuadratureScheme,
    SampleBatch,
    SamplerTable,
    build_sampler,
    quad_cdf,
    quad_density,
    sample_eht,
)
from husimi_tomo.states import make_coherent_state, make_number_state, make_thermal_state

RNG = np.random.default_rng(2024)
THETAS = RNG.uniform(0, 2 * math.pi, 8)


def coherent_density(z, theta, x):
    mean = math.sqrt(2) * (z * np.exp(-1j * theta)).real
    return np.exp(-((x - mean) ** 2)) / math.sqrt(math.pi)


class TestDensity:
    def test_vacuum(self):
        x = np.linspace(-4, 4, 33)
        for theta in (0.0, 1.3, 5.0):
            np.testing.assert_allclose(
                quad_density(make_number_state(0, 8), theta, x), np.exp(-(x**2)) / math.sqrt(math.pi), atol=1e-15
            )

    @pytest.mark.parametrize("z", [1.0, 1 + 0.5j, -0.7 + 1.4j])
    @pytest.mark.parametrize("theta", [0.0, 0.6, math.pi / 2, 2.8, 5.5])
    def test_coherent(self, z, theta):
        x = np.linspace(-5, 5, 41)
        np.testing.assert_allclose(
            quad_density(make_coherent_state(z, 64), theta, x), coherent_density(z, theta, x), atol=1e-13
        )

    def test_number_one(self):
        x = np.linspace(-4, 4, 33)
        np.testing.assert_allclose(
            quad_density(make_number_state(1, 8), 0.9, x),
            2 * x**2 * np.exp(-(x**2)) / math.sqrt(math.pi),
            atol=1e-15,
        )

    def test_scalar(self):
        assert isinstance(quad_density(make_number_state(0, 4), 0.0, 0.0), float)

    def test_normalized(self, states):
        t, w = leggauss(200)
        L = math.sqrt(2 * 64) + 6
        for rho in states.values():
            for theta in THETAS:
                assert quad_density(rho, theta, L * t) @ (L * w) == pytest.approx(1.0, abs=1e-8)

    def test_positive(self, states):
        x = np.linspace(-12, 12, 2001)
        for rho in states.values():
            for theta in THETAS:
                assert quad_density(rho, theta, x).min() >= -1e-12

    def test_double_covering_parity(self, states):
        x = np.linspace(-6, 6, 121)
        for rho in states.values():
            for theta in THETAS:
                np.testing.assert_allclose(
                    quad_density(rho, theta + math.pi, x), quad_density(rho, theta, -x), rtol=0, atol=1e-12
                )

    def test_phase_convention_lock(self):
        rho = make_coherent_state(1.0, 32)
        t, w = leggauss(120)
        x, w = 10 * t, 10 * w
        mean = lambda theta: float((x * quad_density(rho, theta, x)) @ w)
        assert mean(0.0) == pytest.approx(math.sqrt(2), abs=1e-12)
        assert mean(math.pi / 2) == pytest.approx(0.0, abs=1e-12)
        # imaginary amplitude: mean sqrt(2) Im(z) at theta = pi/2 fixes the sign of e^{-ik theta}
        rho_i = make_coherent_state(1j, 32)
        assert float((x * quad_density(rho_i, math.pi / 2, x)) @ w) == pytest.approx(math.sqrt(2), abs=1e-12)

    @pytest.mark.parametrize("rho", [make_number_state(3, 16), make_thermal_state(0.5, 32)])
    def test_rotation_invariance(self, rho):
        x = np.linspace(-5, 5, 51)
        ref = quad_density(rho, 0.0, x)
        for theta in THETAS:
            np.testing.assert_allclose(quad_density(rho, theta, x), ref, rtol=0, atol=1e-12)


class TestSampler:
    def test_vacuum_mass(self):
        table = build_sampler(make_number_state(0, 64), 0.0)
        assert abs(table.mass - 1) <= 1e-10
        assert table.grid.size == 4001
        assert table.grid[-1] == pytest.approx(math.sqrt(128) + 5)

    def test_number_three_mass(self):
        table = build_sampler(make_number_state(3, 64), 1.0)
        assert abs(table.mass - 1) <= 1e-10

    def test_monotone(self):
        table = build_sampler(make_coherent_state(1 + 0.5j, 64), 0.4)
        assert np.all(np.diff(table.cdf) >= 0)
        assert table.cdf[0] == 0.0 and table.cdf[-1] == 1.0

    def test_inadequate_grid(self):
        with pytest.raises(NumericError):
            build_sampler(make_number_state(0, 8), 0.0, x_limit=1.0)

    def test_table_validation(self):
        with pytest.raises(ValueError):
            SamplerTable(0.0, np.array([0.0, 1.0]), np.array([0.0, 0.5]))
        with pytest.raises(ValueError):
            SamplerTable(0.0, np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.7, 0.6]))

    def test_cdf_lookup(self):
        table = build_sampler(make_number_state(0, 64), 0.0)
        assert quad_cdf(table, -100.0) == 0.0
        assert quad_cdf(table, 100.0) == 1.0
        assert quad_cdf(table, 0.0) == pytest.approx(0.5, abs=1e-6)
        np.testing.assert_allclose(quad_cdf(table, np.array([-100.0, 100.0])), [0.0, 1.0])


@pytest.fixture(scope="module")
def vacuum_samples():
    return sample_eht(make_number_state(0, 64), 100_000, seed=123)


class TestSampling:
    def test_vacuum_mean(self, vacuum_samples):
        sigma = math.sqrt(0.5)
        assert abs(vacuum_samples.x.mean()) <= 4 * sigma / math.sqrt(len(vacuum_samples))

    def test_vacuum_variance(self, vacuum_samples):
        assert vacuum_samples.x.var() == pytest.approx(0.5, rel=0.05)

    def test_theta_histogram_uniform(self):
        n, bins = 360_000, 360
        s = sample_eht(make_coherent_state(1 + 0.5j, 64), n, seed=9)
        idx = np.rint(s.theta / (2 * math.pi) * bins).astype(int)
        counts = np.bincount(idx, minlength=bins)
        assert counts.size == bins
        p = 1 / bins
        sd = math.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) <= 4 * sd)

    def test_coherent_quadrature_means(self):
        z = 1 + 0.5j
        s = sample_eht(make_coherent_state(z, 64), 200_000, seed=4)
        resid = s.x - math.sqrt(2) * (z * np.exp(-1j * s.theta)).real
        assert abs(resid.mean()) <= 4 * math.sqrt(0.5 / len(s))
        assert resid.var() == pytest.approx(0.5, rel=0.02)

    def test_deterministic(self):
        rho = make_number_state(2, 32)
        a = sample_eht(rho, 150_000, seed=42)
        b = sample_eht(rho, 150_000, seed=42)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.theta, b.theta)
        c = sample_eht(rho, 150_000, seed=43)
        assert not np.array_equal(a.x, c.x)

    def test_thread_count_irrelevant(self):
        rho = make_thermal_state(0.5, 32)
        a = sample_eht(rho, 200_000, seed=5, threads=1)
        b = sample_eht(rho, 200_000, seed=5, threads=4)
        np.testing.assert_array_equal(a.x, b.x)

    def test_prefix_stable(self):
        rho = make_number_state(0, 16)
        a = sample_eht(rho, 70_000, seed=1)
        b = sample_eht(rho, 65_536, seed=1)
        np.testing.assert_array_equal(a.x[:65_536], b.x)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sample_eht(make_number_state(0, 4), 0, seed=0)


class TestTypes:
    def test_sample_theta_range(self):
        QuadratureSample(0.0, 1.0)
        with pytest.raises(ValueError):
            QuadratureSample(2 * math.pi, 0.0)
        with pytest.raises(ValueError):
            QuadratureSample(-0.1, 0.0)

    def test_batch_sequence(self):
        batch = sample_eht(make_number_state(0, 8), 10, seed=0)
        items = list(batch)
        assert len(items) == 10 and all(isinstance(s, QuadratureSample) for s in items)
        assert batch[3] == items[3]
        assert len(batch[2:5]) == 3
        assert SampleBatch.from_samples(items).x.tolist() == batch.x.tolist()

    @pytest.mark.parametrize("kwargs", [dict(theta_nodes=8), dict(x_nodes=16), dict(x_limit=3.0)])
    def test_scheme_invariants(self, kwargs):
        with pytest.raises(ValueError):
            QuadratureScheme(**kwargs)

    def test_scheme_for_dim(self):
        s = QuadratureScheme.for_dim(32)
        assert s.x_limit == pytest.approx(8 + 6)
        assert s.thetas().size == 128 and s.thetas()[1] == pytest.approx(2 * math.pi / 128)
