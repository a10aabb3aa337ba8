"""Regularity estimation: oscillation mechanics, exponent maps, spectra,
approximation exponents and the agreement report."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import levyfield as lf
from levyfield.analysis import (FLAG_JUMP_LOCUS, FLAG_OK, FLAG_SATURATED,
                                approx_exponent_map, oscillation)
from levyfield.errors import ConfigError


def field_1d(values, lo=0.0, hi=1.0, tag="jump"):
    grid = lf.GridSpec((lo,), (hi,), (len(values),))
    return lf.FieldSample(grid, np.asarray(values, dtype=float), tag, 0, "")


def step_field(n=257, pos=0.5, size=2.0):
    grid = lf.GridSpec((0.0,), (1.0,), (n,))
    vals = np.where(grid.axis(0) > pos, size, 0.0)
    return lf.FieldSample(grid, vals, "jump", 0, "")


class TestOscillation:
    def test_constant_field_zero(self):
        s = field_1d(np.ones(129))
        for k in (2, 3, 4):
            assert oscillation(s, [0.5], k) == 0.0

    def test_affine_detrended_vanishes(self):
        grid = lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (33, 33))
        vals = grid.points() @ np.array([0.7, -0.3]) + 2.0
        s = lf.FieldSample(grid, vals, "jump", 0, "")
        assert oscillation(s, [0.0, 0.0], 2, detrended=True) < 1e-10
        assert oscillation(s, [0.0, 0.0], 2) > 0.1

    def test_step_on_jump_all_scales(self):
        s = step_field()
        for k in (2, 4, 6):
            assert oscillation(s, [0.5], k) == 2.0

    def test_monotone_in_scale(self):
        rng = np.random.default_rng(4)
        s = field_1d(np.cumsum(rng.standard_normal(513)))
        prev = math.inf
        for k in (2, 3, 4, 5, 6):
            cur = oscillation(s, [0.5], k)
            assert cur <= prev
            prev = cur

    def test_scale_below_resolution(self):
        s = field_1d(np.zeros(17))
        with pytest.raises(ConfigError):
            oscillation(s, [0.5], 8)

    def test_not_a_grid_point(self):
        s = field_1d(np.zeros(17))
        with pytest.raises(ConfigError):
            oscillation(s, [0.03], 2)


class TestHolderMap:
    def test_step_exponent_zero_on_plane(self):
        hm = lf.holder_map(step_field(), k_min=2, k_max=6)
        grid_idx = int(np.argmin(np.abs(step_field().grid.axis(0) - 0.5)))
        assert hm.flags[grid_idx] == FLAG_OK
        assert hm.exponent[grid_idx] == pytest.approx(0.0, abs=1e-12)
        assert hm.r2[grid_idx] == 1.0

    def test_constant_saturated(self):
        hm = lf.holder_map(field_1d(np.full(1025, 3.0)), k_min=2, k_max=8)
        assert np.all(hm.flags == FLAG_SATURATED)
        assert np.all(np.isnan(hm.exponent))

    def test_affine_saturated_in_auto_mode(self):
        # boundary windows are clipped and their raw decay is not dyadic, so
        # the saturation claim is about interior points (one coarsest ball margin)
        grid = lf.GridSpec((0.0,), (1.0,), (1025,))
        vals = 0.8 * grid.axis(0) + 1.0
        hm = lf.holder_map(lf.FieldSample(grid, vals, "jump", 0, ""), k_min=2, k_max=8)
        interior = (grid.axis(0) > 0.25) & (grid.axis(0) < 0.75)
        assert np.all(hm.flags[interior] == FLAG_SATURATED)

    def test_brownian_median_near_half(self):
        mu = lf.SphericalMeasure(1, atoms=[([1.0], 1.0)])
        s = lf.sample_gaussian(mu, lf.GridSpec((0.0,), (1.0,), (4097,)), 8)
        hm = lf.holder_map(s, k_min=2, k_max=10)
        assert 0.35 < np.median(hm.ok_exponents()) < 0.65

    def test_scaling_invariance(self):
        rng = np.random.default_rng(9)
        vals = np.cumsum(rng.standard_normal(1025)) * 0.01
        a = lf.holder_map(field_1d(vals), k_min=2, k_max=8)
        b = lf.holder_map(field_1d(vals * 37.5), k_min=2, k_max=8)
        assert np.nanmax(np.abs(a.exponent - b.exponent)) < 1e-10
        assert np.array_equal(a.flags, b.flags)

    def test_constant_shift_invariance_exact(self):
        rng = np.random.default_rng(10)
        vals = np.cumsum(rng.standard_normal(513))
        a = lf.holder_map(field_1d(vals), k_min=2, k_max=7)
        b = lf.holder_map(field_1d(vals + 1000.0), k_min=2, k_max=7)
        assert np.nanmax(np.abs(a.exponent - b.exponent)) < 1e-7

    def test_affine_invariance_detrended(self):
        rng = np.random.default_rng(11)
        vals = np.cumsum(rng.standard_normal(513))
        grid = lf.GridSpec((0.0,), (1.0,), (513,))
        a = lf.holder_map(field_1d(vals), k_min=2, k_max=7, detrend="always")
        shifted = vals + 5.0 * grid.axis(0) - 2.0
        b = lf.holder_map(field_1d(shifted), k_min=2, k_max=7, detrend="always")
        assert np.nanmax(np.abs(a.exponent - b.exponent)) < 1e-10

    def test_detrended_recovers_steep_exponents(self):
        # |t - 1/2|^1.4 has exponent 1.4 at the cusp, invisible to raw oscillation
        grid = lf.GridSpec((0.0,), (1.0,), (4097,))
        vals = np.abs(grid.axis(0) - 0.5) ** 1.4
        s = lf.FieldSample(grid, vals, "jump", 0, "")
        hm = lf.holder_map(s, k_min=2, k_max=10, detrend="auto")
        idx = 2048
        assert hm.exponent[idx] == pytest.approx(1.4, abs=0.1)

    def test_needs_enough_scales(self):
        with pytest.raises(ConfigError):
            lf.holder_map(field_1d(np.zeros(129)), k_min=2, k_max=4)


class TestSpectrum:
    def test_constant_field_all_absent(self):
        est = lf.spectrum_estimate(field_1d(np.ones(1025)), [0.3, 0.5], 0.1, 2, 8)
        assert np.all(np.isnan(est.dims))
        assert np.all(est.saturated_boxes == est.total_boxes)

    def test_counts_bounded_by_boxes(self):
        rng = np.random.default_rng(12)
        vals = np.cumsum(rng.standard_normal(2049))
        est = lf.spectrum_estimate(field_1d(vals), [0.1, 0.3, 0.5, 0.7, 0.9], 0.1, 2, 9)
        for i in range(est.ks.size):
            assert est.counts[i].sum() <= est.total_boxes[i]

    def test_brownian_mass_at_half(self):
        mu = lf.SphericalMeasure(1, atoms=[([1.0], 1.0)])
        s = lf.sample_gaussian(mu, lf.GridSpec((0.0,), (1.0,), (2 ** 13 + 1,)), 3)
        est = lf.spectrum_estimate(s, [0.1, 0.3, 0.5, 0.7, 0.9], 0.1, 2, 11)
        # the 0.5 bin dominates at the finest scale and carries dimension ~ 1
        assert est.counts[-1].argmax() == 2
        assert est.dims[2] == pytest.approx(1.0, abs=0.15)

    def test_bin_width_validated(self):
        with pytest.raises(ConfigError):
            lf.spectrum_estimate(field_1d(np.zeros(64)), [0.5], 0.01, 2, 5)


def compound_atoms(seed=3):
    nu = lf.JumpMeasure.from_half_atoms(2, [([1.0, 0.0], 0.8, 1.0), ([0.6, 0.8], -1.4, 1.0)])
    return nu, lf.sample_atoms(nu, 1.5, 5, seed)


class TestApproxExponent:
    def test_finite_measure_infinite_off_planes(self):
        # all jumps above size one: no sub-unit band carries atoms, so no point
        # is approximated at any rate and the estimate is infinite off the locus
        nu = lf.JumpMeasure.from_half_atoms(2, [([1.0, 0.0], 2.0, 1.0),
                                                ([0.6, 0.8], -1.4, 1.0)])
        ats = lf.sample_atoms(nu, 1.5, 5, 3)
        grid = lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (33, 33))
        am = lf.approx_exponent_map(ats, grid, j_floor=1)
        off = am.flags == FLAG_OK
        assert np.all(np.isinf(am.a_hat[off]))

    def test_point_on_hyperplane_flagged(self):
        ats = lf.AtomSet(1, 2.0, 5, 0,
                         {1: (np.array([0.5]), np.array([[1.0]]), np.array([0.6]))})
        grid = lf.GridSpec((0.0,), (1.0,), (5,))  # 0.5 is a grid point
        am = lf.approx_exponent_map(ats, grid, j_floor=1)
        idx = 2
        assert am.flags[idx] == FLAG_JUMP_LOCUS
        assert np.all(am.flags[np.arange(5) != idx] == FLAG_OK)

    def test_single_atom_formula(self):
        # one atom at distance d with |x| = 0.6: alpha = log 0.6 / log d
        ats = lf.AtomSet(1, 2.0, 5, 0,
                         {1: (np.array([0.5]), np.array([[1.0]]), np.array([0.6]))})
        grid = lf.GridSpec((0.0,), (1.0,), (101,))
        am = lf.approx_exponent_map(ats, grid, j_floor=1)
        t = grid.axis(0)
        d = np.abs(t - 0.5)
        with np.errstate(divide="ignore"):
            expected = np.where((d > 1e-14) & (d < 1.0), np.log(0.6) / np.log(d), np.inf)
        finite = np.isfinite(expected)
        assert np.allclose(am.a_hat[finite], expected[finite], atol=1e-12)

    def test_kernel_matches_reference(self):
        nu = lf.JumpMeasure(2, directional=lf.SphericalMeasure(2, isotropic_mass=1.0),
                            radial=lf.StableRadial(1.2))
        ats = lf.sample_atoms(nu, 1.5, 8, 17)
        grid = lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (33, 33))
        fast = lf.approx_exponent_map(ats, grid, j_floor=2, alpha_cap=None)
        ref = approx_exponent_map(ats, grid, j_floor=2, alpha_cap=None, use_reference=True)
        assert np.array_equal(np.isfinite(fast.a_hat), np.isfinite(ref.a_hat))
        both = np.isfinite(fast.a_hat)
        assert np.allclose(fast.a_hat[both], ref.a_hat[both], rtol=1e-12)
        assert np.array_equal(fast.flags, ref.flags)

    def test_cap_exact_below(self):
        nu = lf.JumpMeasure(2, directional=lf.SphericalMeasure(2, isotropic_mass=1.0),
                            radial=lf.StableRadial(1.0))
        ats = lf.sample_atoms(nu, 1.5, 7, 23)
        grid = lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (17, 17))
        exact = lf.approx_exponent_map(ats, grid, j_floor=1, alpha_cap=None)
        capped = lf.approx_exponent_map(ats, grid, j_floor=1, alpha_cap=1.5)
        below = exact.a_hat < 1.5
        assert np.array_equal(capped.a_hat[below], exact.a_hat[below])
        assert np.all(np.isinf(capped.a_hat[~below]))

    def test_monotone_in_truncation_depth(self):
        nu = lf.JumpMeasure(2, directional=lf.SphericalMeasure(2, isotropic_mass=1.0),
                            radial=lf.StableRadial(1.3))
        deep = lf.sample_atoms(nu, 1.5, 10, 29)
        grid = lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (17, 17))
        shallow_map = lf.approx_exponent_map(deep.truncated(6), grid, j_floor=2)
        deep_map = lf.approx_exponent_map(deep, grid, j_floor=2)
        assert np.all(deep_map.a_hat <= shallow_map.a_hat + 1e-15)

    def test_band_floor_precondition(self):
        _, ats = compound_atoms()
        with pytest.raises(ConfigError):
            lf.approx_exponent_map(ats, lf.GridSpec((-1.0, -1.0), (1.0, 1.0), (9, 9)),
                                   j_floor=4)


class TestAgreement:
    def make_holder(self, grid, values, flags=None):
        n = grid.n_points
        return lf.HolderMap(grid, values, np.ones(n),
                            flags if flags is not None else np.zeros(n, dtype=np.uint8),
                            2, 6)

    def make_approx(self, grid, values, flags=None):
        n = grid.n_points
        return lf.ApproxExponentMap(grid, values, flags if flags is not None
                                    else np.zeros(n, dtype=np.uint8),
                                    np.zeros((1, n)), np.array([1]), 1, None)

    def test_identical_maps(self):
        grid = lf.GridSpec((0.0,), (1.0,), (11,))
        vals = np.linspace(0.1, 1.0, 11)
        rep = lf.exponent_agreement(self.make_holder(grid, vals),
                                    self.make_approx(grid, vals.copy()))
        assert rep.median_abs_diff == 0.0
        assert rep.fraction_within == 1.0
        assert rep.n_pairs == 11

    def test_flag_exclusion(self):
        grid = lf.GridSpec((0.0,), (1.0,), (4,))
        hflags = np.array([0, 1, 0, 0], dtype=np.uint8)
        aflags = np.array([0, 0, 2, 0], dtype=np.uint8)
        rep = lf.exponent_agreement(self.make_holder(grid, np.ones(4), hflags),
                                    self.make_approx(grid, np.ones(4), aflags))
        assert rep.n_pairs == 2

    def test_combined_uses_min_with_half(self):
        grid = lf.GridSpec((0.0,), (1.0,), (3,))
        holder = self.make_holder(grid, np.array([0.5, 0.5, 0.5]))
        approx = self.make_approx(grid, np.array([0.9, np.inf, 0.3]))
        rep = lf.exponent_agreement(holder, approx, combined=True)
        assert rep.n_pairs == 3  # inf becomes the gaussian exponent 1/2
        assert rep.fraction_within == pytest.approx(1.0)

    def test_grid_mismatch(self):
        g1 = lf.GridSpec((0.0,), (1.0,), (5,))
        g2 = lf.GridSpec((0.0,), (1.0,), (7,))
        with pytest.raises(ConfigError):
            lf.exponent_agreement(self.make_holder(g1, np.zeros(5)),
                                  self.make_approx(g2, np.zeros(7)))


@given(scale=st.floats(0.02, 50.0))
@settings(max_examples=15, deadline=None)
def test_holder_scaling_property(scale):
    rng = np.random.default_rng(77)
    vals = np.cumsum(rng.standard_normal(257))
    a = lf.holder_map(field_1d(vals), k_min=2, k_max=6)
    b = lf.holder_map(field_1d(vals * scale), k_min=2, k_max=6)
    assert np.nanmax(np.abs(a.exponent - b.exponent)) < 1e-10
