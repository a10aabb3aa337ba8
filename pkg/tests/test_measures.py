"""Deterministic measure calculus: band masses, index, admissibility, gauges,
spectra and traces, each checked against an independent oracle where one exists."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

import levyfield as lf
from levyfield.errors import ConfigError


def iso_stable(dim, alpha, scale=1.0, mass=1.0):
    return lf.JumpMeasure(dim, directional=lf.SphericalMeasure(dim, isotropic_mass=mass),
                          radial=lf.StableRadial(alpha, scale))


def table_measure(nu_list, nu0=1.0, continuation="geometric"):
    return lf.JumpMeasure(1, directional=lf.SphericalMeasure(1, isotropic_mass=1.0),
                          radial=lf.BandTableRadial(nu0, nu_list, continuation))


class TestBandMass:
    def test_stable_band_quadrature_oracle(self):
        # two-sided mass of band 1 for density |x|^-2: 2 * int_{1/2}^1 x^-2 dx
        oracle = 2.0 * quad(lambda x: x ** -2, 0.5, 1.0)[0]
        nu = iso_stable(1, alpha=1.0, scale=1.0)
        assert lf.band_mass(nu, 1) == pytest.approx(oracle, abs=1e-10)
        assert lf.band_mass(nu, 1) == pytest.approx(2.0, abs=1e-12)

    def test_finite_atoms_enumeration_oracle(self):
        nu = lf.JumpMeasure(1, directional=lf.SphericalMeasure(1, isotropic_mass=1.0),
                            radial=lf.FiniteAtomsRadial([(0.3, 1.0)]))
        # +-0.3 with weight 1 each; 0.3 in (0.25, 0.5] which is band 2
        assert lf.band_mass(nu, 2) == 2.0
        assert lf.band_mass(nu, 1) == 0.0
        assert lf.band_mass(nu, 5) == 0.0

    def test_empty_measure(self):
        assert lf.band_mass(lf.JumpMeasure.zero(2), 3) == 0.0

    def test_band_zero_is_large_jumps(self):
        nu = lf.JumpMeasure(1, directional=lf.SphericalMeasure(1, isotropic_mass=1.0),
                            radial=lf.FiniteAtomsRadial([(2.5, 0.7)]))
        assert lf.band_mass(nu, 0) == pytest.approx(1.4)

    def test_atomlist_additivity_exact(self):
        # dyadic weights so that float addition is associative here
        half = [([1.0, 0.0], 0.75, 0.5), ([0.0, 1.0], 2.0, 0.25), ([0.6, 0.8], 0.1, 1.0)]
        nu = lf.JumpMeasure.from_half_atoms(2, half)
        total = float(nu.atom_weights.sum())
        assert sum(lf.band_mass(nu, j) for j in range(0, 8)) == total

    def test_negative_band_rejected(self):
        with pytest.raises(ConfigError):
            lf.band_mass(lf.JumpMeasure.zero(1), -1)


class TestIndexBeta:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9])
    def test_stable_exact(self, alpha):
        assert lf.index_beta(iso_stable(2, alpha)) == alpha

    def test_finite_atoms_zero(self):
        nu = lf.JumpMeasure(1, directional=lf.SphericalMeasure(1, isotropic_mass=1.0),
                            radial=lf.FiniteAtomsRadial([(0.3, 1.0)]))
        assert lf.index_beta(nu) == 0.0

    def test_atomlist_zero(self):
        nu = lf.JumpMeasure.from_half_atoms(2, [([1.0, 0.0], 0.01, 3.0)])
        assert lf.index_beta(nu) == 0.0

    def test_band_table_integrability_rejected(self):
        # dyadic growth rate 2.5 violates the square-integrability of small jumps
        with pytest.raises(lf.IntegrabilityError):
            lf.index_beta(table_measure([2.0 ** (2.5 * j) for j in range(1, 31)]))

    def test_band_table_exact_powers(self):
        nu = table_measure([2.0 ** (0.8 * j) for j in range(1, 41)])
        assert lf.index_beta(nu) == pytest.approx(0.8, abs=1e-9)

    def test_band_table_bisection_oracle(self):
        # oracle: bisect gamma on convergence of sum 2^(-gamma j) nu_j, judged
        # by whether the tail terms decay geometrically
        nu_vals = [2.0 ** (0.8 * j) for j in range(1, 41)]

        def converges(gamma):
            terms = [2.0 ** (-gamma * j) * nu_vals[j - 1] for j in range(1, 41)]
            return terms[-1] < terms[len(terms) // 2]

        lo, hi = 0.0, 2.0
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if converges(mid):
                hi = mid
            else:
                lo = mid
        beta_oracle = 0.5 * (lo + hi)
        nu = table_measure(nu_vals)
        assert lf.index_beta(nu) == pytest.approx(beta_oracle, abs=0.02)

    def test_band_table_recovery_from_stable(self):
        for alpha in (0.3, 1.0, 1.9):
            radial = lf.StableRadial(alpha)
            table = lf.BandTableRadial(radial.band_mass(0),
                                       [radial.band_mass(j) for j in range(1, 41)])
            nu = lf.JumpMeasure(1, directional=lf.SphericalMeasure(1, isotropic_mass=1.0),
                                radial=table)
            assert lf.index_beta(nu) == pytest.approx(alpha, abs=0.02)


class TestAdmissibility:
    def test_stable_converges(self):
        partial, converged = lf.admissibility_chi(iso_stable(2, 1.5), 40)
        assert math.isfinite(partial) and partial > 0
        assert converged

    def test_finite_atoms_terms_vanish(self):
        nu = lf.JumpMeasure(1, directional=lf.SphericalMeasure(1, isotropic_mass=1.0),
                            radial=lf.FiniteAtomsRadial([(0.3, 1.0)]))
        partial, converged = lf.admissibility_chi(nu, 40)
        assert converged
        # only band 2 contributes
        assert partial == pytest.approx(2.0 ** -2 * math.sqrt(2 * 2.0))

    def test_critical_table_diverges(self):
        # nu_j = 2^2j / j^2 gives terms j^(-1/2): harmonic-type divergence
        nu = table_measure([2.0 ** (2 * j) / j ** 2 for j in range(1, 41)])
        partial, converged = lf.admissibility_chi(nu, 40)
        oracle = sum(j ** -0.5 for j in range(1, 41))
        assert partial == pytest.approx(oracle, rel=1e-9)
        assert not converged

    def test_critical_table_converges_when_summable(self):
        # nu_j = 2^2j / j^4 gives terms j^(-3/2), summable
        nu = table_measure([2.0 ** (2 * j) / j ** 4 for j in range(1, 41)])
        _, converged = lf.admissibility_chi(nu, 40)
        assert converged


class TestGaugeExponent:
    def test_power_gauge_closed_form(self):
        assert lf.gauge_exponent(iso_stable(2, 1.2), lf.PowerGauge(0.6)) == 0.5

    def test_matching_exponents(self):
        assert lf.gauge_exponent(iso_stable(1, 1.0), lf.PowerGauge(1.0)) == 1.0

    def test_finite_mass_infinite(self):
        nu = lf.JumpMeasure(1, directional=lf.SphericalMeasure(1, isotropic_mass=1.0),
                            radial=lf.FiniteAtomsRadial([(0.3, 1.0)]))
        assert lf.gauge_exponent(nu, lf.PowerGauge(0.7)) == math.inf

    @pytest.mark.parametrize("b", [1.0, -0.5])
    def test_log_correction_bisection(self, b):
        got = lf.gauge_exponent(iso_stable(2, 1.2), lf.PowerGauge(0.6, b=b))
        assert got == pytest.approx(0.5, abs=0.01)

    @given(alpha=st.floats(0.3, 1.9), s=st.floats(0.05, 1.0))
    @settings(max_examples=25, deadline=None)
    def test_identity_with_index(self, alpha, s):
        nu = iso_stable(2, alpha)
        assert lf.gauge_exponent(nu, lf.PowerGauge(s)) * lf.index_beta(nu) == pytest.approx(s, abs=1e-12)


class TestTheoreticalSpectrum:
    def setup_method(self):
        self.jump = iso_stable(2, 1.2)
        self.no_gauss = lf.CharTriple(2, jump=self.jump)
        self.with_gauss = lf.CharTriple(2, gaussian=lf.SphericalMeasure(2, isotropic_mass=math.pi),
                                        jump=self.jump)

    def test_formula_values(self):
        assert lf.theoretical_spectrum(self.no_gauss, 0.5) == pytest.approx(1.6)
        assert lf.theoretical_spectrum(self.with_gauss, 0.5) == 2.0
        assert lf.theoretical_spectrum(self.no_gauss, 1.0) == -math.inf
        assert lf.theoretical_spectrum(self.with_gauss, 0.6) == -math.inf

    def test_compound_poisson_rejected(self):
        triple = lf.CharTriple(1, jump=lf.JumpMeasure(1,
                               directional=lf.SphericalMeasure(1, isotropic_mass=1.0),
                               radial=lf.FiniteAtomsRadial([(0.3, 1.0)])))
        with pytest.raises(ConfigError, match="compound"):
            lf.theoretical_spectrum(triple, 0.5)

    @given(h1=st.floats(0.0, 0.83), h2=st.floats(0.0, 0.83))
    @settings(max_examples=30, deadline=None)
    def test_affine_with_slope_beta(self, h1, h2):
        d1 = lf.theoretical_spectrum(self.no_gauss, h1)
        d2 = lf.theoretical_spectrum(self.no_gauss, h2)
        assert d2 - d1 == pytest.approx(1.2 * (h2 - h1), abs=1e-9)
        if h2 >= h1:
            assert d2 >= d1 - 1e-12


class TestTrace:
    def test_isotropic_preserves_index(self):
        triple = lf.CharTriple(2, jump=iso_stable(2, 1.4))
        traced = lf.trace_triple(triple, [[0.6, 0.8]])
        assert traced.dim == 1
        assert lf.index_beta(traced.jump) == lf.index_beta(triple.jump)

    def test_identity_basis_unchanged(self):
        mu = lf.SphericalMeasure(2, isotropic_mass=0.5, atoms=[([1.0, 0.0], 0.3)])
        triple = lf.CharTriple(2, drift=[0.1, -0.2], gaussian=mu, jump=iso_stable(2, 1.1))
        traced = lf.trace_triple(triple, np.eye(2))
        assert np.allclose(traced.drift, triple.drift)
        assert traced.gaussian.isotropic_mass == mu.isotropic_mass
        assert np.allclose(traced.gaussian.atom_dirs, mu.atom_dirs)
        assert np.allclose(traced.gaussian.atom_weights, mu.atom_weights)
        assert lf.index_beta(traced.jump) == lf.index_beta(triple.jump)

    def test_perpendicular_atom_dropped(self):
        # jumps along hyperplanes normal to e_1 never cross the e_2 line
        nu = lf.JumpMeasure.from_half_atoms(2, [([1.0, 0.0], 0.5, 1.0)])
        triple = lf.CharTriple(2, jump=nu)
        traced = lf.trace_triple(triple, [[0.0, 1.0]])
        assert traced.jump.is_zero

    def test_weight_scaling(self):
        nu = lf.JumpMeasure.from_half_atoms(2, [([0.6, 0.8], 0.5, 1.0)])
        traced = lf.trace_triple(lf.CharTriple(2, jump=nu), [[1.0, 0.0]])
        # projection norm |<s, e_1>| = 0.6 scales the weight and renormalizes s
        assert traced.jump.atom_weights == pytest.approx(np.array([0.6, 0.6]))
        assert np.allclose(np.abs(traced.jump.atom_dirs), 1.0)

    def test_compose_two_traces(self):
        rng = np.random.default_rng(5)
        half = []
        for _ in range(4):
            v = rng.standard_normal(3)
            half.append((v / np.linalg.norm(v), rng.uniform(0.2, 2.0), rng.uniform(0.5, 1.5)))
        mu_atoms = []
        for _ in range(3):
            v = rng.standard_normal(3)
            mu_atoms.append((v / np.linalg.norm(v), rng.uniform(0.5, 1.5)))
        triple = lf.CharTriple(3, drift=[0.3, -0.1, 0.7],
                               gaussian=lf.SphericalMeasure(3, 0.0, mu_atoms),
                               jump=lf.JumpMeasure.from_half_atoms(3, half))
        e2 = np.array([[1.0, 0.0, 0.0], [0.0, 0.8, 0.6]])
        f = np.array([[0.6, 0.8]])
        step = lf.trace_triple(lf.trace_triple(triple, e2), f)
        direct = lf.trace_triple(triple, f @ e2)

        def atom_key(dirs, x, w):
            order = np.lexsort((w, x, dirs[:, 0]))
            return dirs[order], x[order], w[order]

        d1, x1, w1 = atom_key(step.jump.atom_dirs, step.jump.atom_x, step.jump.atom_weights)
        d2, x2, w2 = atom_key(direct.jump.atom_dirs, direct.jump.atom_x, direct.jump.atom_weights)
        assert np.allclose(d1, d2, atol=1e-10)
        assert np.allclose(x1, x2, atol=1e-10)
        assert np.allclose(w1, w2, atol=1e-10)
        assert np.allclose(step.drift, direct.drift, atol=1e-10)

    def test_non_orthonormal_rejected(self):
        with pytest.raises(ConfigError):
            lf.trace_triple(lf.CharTriple(2), [[1.0, 1.0]])

    def test_index_never_increases(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            v = rng.standard_normal(2)
            v /= np.linalg.norm(v)
            nu = lf.JumpMeasure(2, directional=lf.SphericalMeasure(2, 0.3, [(v, 0.7)]),
                                radial=lf.StableRadial(1.3))
            triple = lf.CharTriple(2, jump=nu)
            w = rng.standard_normal(2)
            w /= np.linalg.norm(w)
            traced = lf.trace_triple(triple, [w])
            assert lf.index_beta(traced.jump) <= lf.index_beta(triple.jump) + 1e-12


class TestMeasureValidation:
    def test_direction_unit_norm(self):
        with pytest.raises(ConfigError):
            lf.Direction([1.0, 1.0])
        assert lf.Direction([0.6, 0.8]).dim == 2

    def test_spherical_total_mass(self):
        mu = lf.SphericalMeasure(2, isotropic_mass=1.0, atoms=[([1.0, 0.0], 0.25)])
        assert mu.total_mass == 1.5

    def test_asymmetric_atomlist_rejected(self):
        with pytest.raises(ConfigError, match="symmetric"):
            lf.JumpMeasure(2, atoms=[([1.0, 0.0], 0.75, 1.0)])

    def test_half_atom_expansion_is_symmetric(self):
        nu = lf.JumpMeasure.from_half_atoms(2, [([1.0, 0.0], 0.75, 1.0)])
        assert nu.atom_x.size == 2
        assert lf.band_mass(nu, 1) == 2.0
