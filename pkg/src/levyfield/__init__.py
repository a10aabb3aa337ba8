"""Simulation and regularity analysis of multivariate Levy fields whose jump
component lives on Poisson hyperplanes.

Build a field from a characteristic triple (drift, spherical Gaussian measure,
hyperplane jump measure), sample it on grids, and estimate pointwise
regularity, singularity spectra and hyperplane-approximation exponents to
check them against the predicted curves.
"""

from .analysis import (AgreementReport, ApproxExponentMap, HolderMap,
                       SpectrumEstimate, approx_exponent_map,
                       exponent_agreement, holder_map, oscillation,
                       spectrum_estimate)
from .config import (AnalysisSettings, ExperimentConfig, SimSettings,
                     fingerprint_jump, fingerprint_triple, load_config,
                     parse_config, serialize_config, serialize_triple_section)
from .errors import (ConfigError, FingerprintMismatchError, IntegrabilityError,
                     LevyFieldError, NumericError)
from .gaussian import (GaussianSampler, covariance, irregularity_statistic,
                       isotropic_variogram_quadrature, modulus_statistic,
                       sample_gaussian, variogram)
from .grid import FieldSample, GridSpec, read_field_csv, write_field_csv
from .jumps import (AtomSet, CFReport, CompensatorTable, HyperplaneAtom,
                    analytic_cf, campbell_variance, cf_validate,
                    compensator_table, evaluate_at_points, evaluate_jump_field,
                    read_atoms_csv, sample_atoms, truncation_error_std,
                    truncation_gap, write_atoms_csv)
from .measures import (ATOMLIST, PRODUCT, BandTableRadial, CharTriple,
                       Direction, FiniteAtomsRadial, JumpMeasure, PowerGauge,
                       SphericalMeasure, StableRadial, admissibility_chi,
                       band_interval, band_mass, gauge_exponent, index_beta,
                       second_moment_band, theoretical_spectrum, trace_triple)

__version__ = "0.1.0"
