"""Gaussian component: variogram closed forms against quadrature, exact draws
against the analytic covariance, and modulus-of-continuity statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import levyfield as lf
from levyfield.errors import ConfigError, NumericError
from levyfield.gaussian import covariance_matrix


def brownian_measure():
    # mass 1 at each of +-1: increment variance |u|
    return lf.SphericalMeasure(1, atoms=[([1.0], 1.0)])


def iso2():
    return lf.SphericalMeasure(2, isotropic_mass=math.pi)


class TestVariogram:
    def test_line_atoms(self):
        assert lf.variogram(brownian_measure(), [0.5]) == pytest.approx(0.5)
        assert lf.variogram(brownian_measure(), [0.0]) == 0.0

    def test_isotropic_plane_quadrature_oracle(self):
        u = [1.0, 0.0]
        closed = lf.variogram(iso2(), u)
        quad = lf.isotropic_variogram_quadrature(2, math.pi, u)
        assert closed == pytest.approx(1.0, abs=1e-12)
        assert quad == pytest.approx(closed, rel=1e-3)

    def test_isotropic_sphere_quadrature_oracle(self):
        mu = lf.SphericalMeasure(3, isotropic_mass=2.0)
        u = [0.3, -0.4, 0.5]
        closed = lf.variogram(mu, u)
        quad = lf.isotropic_variogram_quadrature(3, 2.0, u)
        assert quad == pytest.approx(closed, rel=2e-3)

    def test_mass_bound(self):
        mu = lf.SphericalMeasure(2, isotropic_mass=0.7, atoms=[([0.6, 0.8], 0.4)])
        for u in ([0.2, -1.0], [3.0, 0.1]):
            assert lf.variogram(mu, u) <= mu.c_mu ** 2 * np.linalg.norm(u) + 1e-12

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 100.0))
    @settings(max_examples=40, deadline=None)
    def test_symmetry_and_homogeneity(self, ux, uy, lam):
        mu = lf.SphericalMeasure(2, isotropic_mass=0.5, atoms=[([0.6, 0.8], 0.25)])
        u = np.array([ux, uy])
        v = lf.variogram(mu, u)
        assert lf.variogram(mu, -u) == v
        assert lf.variogram(mu, lam * u) == pytest.approx(lam * v, rel=1e-12, abs=1e-300)

    def test_dim_mismatch(self):
        with pytest.raises(ConfigError):
            lf.variogram(iso2(), [1.0])


class TestCovariance:
    def test_diagonal_and_zero(self):
        mu = brownian_measure()
        assert lf.covariance(mu, [0.7], [0.7]) == pytest.approx(lf.variogram(mu, [0.7]))
        assert lf.covariance(mu, [1.0], [0.0]) == 0.0

    def test_brownian_min(self):
        assert lf.covariance(brownian_measure(), [1.0], [2.0]) == pytest.approx(1.0)

    def test_matrix_psd(self):
        rng = np.random.default_rng(7)
        pts = rng.uniform(-1, 1, size=(40, 2))
        cov = covariance_matrix(iso2(), pts)
        assert np.allclose(cov, cov.T)
        evals = np.linalg.eigvalsh(cov)
        assert evals.min() >= -1e-9 * max(evals.max(), 1.0)


class TestSampling:
    def test_reproducible_bitwise(self):
        grid = lf.GridSpec((0.0,), (1.0,), (257,))
        a = lf.sample_gaussian(brownian_measure(), grid, 42)
        b = lf.sample_gaussian(brownian_measure(), grid, 42)
        assert np.array_equal(a.values, b.values)
        c = lf.sample_gaussian(brownian_measure(), grid, 43)
        assert not np.array_equal(a.values, c.values)

    def test_origin_pinned(self):
        grid1 = lf.GridSpec((0.0,), (1.0,), (2,))
        assert lf.sample_gaussian(brownian_measure(), grid1, 1).values[0] == 0.0
        grid2 = lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (5, 5))
        s = lf.sample_gaussian(iso2(), grid2, 1)
        assert s.values[grid2.origin_index()] == 0.0

    def test_zero_measure_rejected(self):
        with pytest.raises(ConfigError):
            lf.sample_gaussian(lf.SphericalMeasure(1), lf.GridSpec((0.0,), (1.0,), (4,)), 0)

    def test_cap_enforced(self):
        grid = lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (80, 80))
        with pytest.raises(ConfigError, match="cap"):
            lf.sample_gaussian(iso2(), grid, 0, cholesky_cap=4096)

    def test_degenerate_direction_jitter(self):
        # all mass along e_1: covariance is rank deficient on a planar grid
        mu = lf.SphericalMeasure(2, atoms=[([1.0, 0.0], 1.0)])
        grid = lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (4, 4))
        s = lf.sample_gaussian(mu, grid, 3)
        vals = s.reshaped()
        # constant along the second axis up to jitter noise
        assert np.abs(vals - vals[:, :1]).max() < 1e-4

    def test_line_empirical_variance(self):
        grid = lf.GridSpec((0.0,), (1.0,), (129,))
        sampler = lf.GaussianSampler(brownian_measure(), grid)
        end = np.array([sampler.sample(s).values[-1] for s in range(1500)])
        se = math.sqrt(2.0 / end.size)
        assert abs(end.var() - 1.0) < 4 * se

    def test_plane_empirical_covariance(self):
        grid = lf.GridSpec((0.25, 0.25), (1.0, 1.0), (2, 2))
        sampler = lf.GaussianSampler(iso2(), grid)
        draws = np.stack([sampler.sample(s).values for s in range(2000)])
        emp = np.cov(draws.T, bias=True)
        ana = covariance_matrix(iso2(), grid.points())
        n = draws.shape[0]
        for i in range(4):
            for j in range(4):
                se = math.sqrt((ana[i, i] * ana[j, j] + ana[i, j] ** 2) / n)
                assert abs(emp[i, j] - ana[i, j]) < 4 * se


class TestModulus:
    def test_zero_field(self):
        grid = lf.GridSpec((0.0,), (1.0,), (65,))
        sample = lf.FieldSample(grid, np.zeros(65), "gaussian", 0, "")
        for _, ratio in lf.modulus_statistic(sample, [0.25, 0.125]):
            assert ratio == 0.0

    def test_brownian_bounded_over_decades(self):
        grid = lf.GridSpec((0.0,), (1.0,), (2 ** 12 + 1,))
        s = lf.sample_gaussian(brownian_measure(), grid, 99)
        deltas = [2.0 ** -k for k in range(2, 7)]
        ratios = [r for _, r in lf.modulus_statistic(s, deltas)]
        c_mu = brownian_measure().c_mu
        assert all(r < 10.0 * c_mu for r in ratios)
        assert max(ratios) < 2.5 * min(ratios)

    def test_irregularity_strictly_positive(self):
        grid = lf.GridSpec((0.0,), (1.0,), (1025,))
        s = lf.sample_gaussian(brownian_measure(), grid, 5)
        assert lf.irregularity_statistic(s, 1.0 / 64) > 0.0

    def test_tag_and_delta_validation(self):
        grid = lf.GridSpec((0.0,), (1.0,), (65,))
        s = lf.FieldSample(grid, np.zeros(65), "jump", 0, "")
        with pytest.raises(ConfigError):
            lf.modulus_statistic(s, [0.25])
        g = lf.FieldSample(grid, np.zeros(65), "gaussian", 0, "")
        with pytest.raises(ConfigError):
            lf.modulus_statistic(g, [1e-4])


def test_non_psd_square_root_error_path():
    # a hand-built non-PSD matrix must exhaust the jitter ladder
    from levyfield.gaussian import _factor_with_jitter
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NumericError):
        _factor_with_jitter(bad)
