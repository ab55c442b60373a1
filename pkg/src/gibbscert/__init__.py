"""Numerical laboratory for lattice systems of unbounded continuous spins.

Builds Gibbs models with perturbed-convex single-site potentials and
diagonally dominant pair interactions, certifies functional inequalities
(log-Sobolev / Poincare) through a matrix criterion, samples the measures
with a Metropolis chain, and cross-checks correlation inequalities against
exact quadrature and Gaussian oracles.
"""

__version__ = "0.1.0"

from .certify import (
    Certificate,
    CertificationFailure,
    DecayFit,
    NotPositiveDefiniteError,
    OttoReznikoffMatrix,
    build_A,
    certify_lsi,
    certify_model,
    convexified_site_constant,
    covariance_bound,
    fit_decay,
    gershgorin_bound,
    inverse_decay_fit,
    inverse_matrix,
    model_matrix,
    single_site_lsi,
    smallest_eigenvalue,
)
from .experiments import (
    CheckRecord,
    ExperimentReport,
    boundary_sensitivity,
    coarse_grained_decay,
    compare_attractive_domination,
    compare_subset_covariances,
    one_sided_verdict,
    variance_uniformity,
)
from .lattice import LatticeBox, Site, distance, make_box, sublattice
from .model import (
    BoundaryCondition,
    InteractionMatrix,
    ModelSpec,
    SingleSitePotential,
    ValidationReport,
    absolute_model,
    boundary_field,
    build_algebraic_interaction,
    coarse_grained_coupling,
    conditioned_model,
    double_well_potential,
    energy,
    grad,
    quadratic_potential,
    quartic_potential,
    uniform_spec,
    validate_spec,
    zero_potential,
)
from .modelfile import (
    ModelConfig,
    ModelFileError,
    build_model,
    parse_model_file,
    parse_model_text,
    serialize_model,
)
from .oracle import (
    QuadratureConfig,
    QuadratureMoments,
    RefinementError,
    gaussian_covariance,
    gaussian_moments,
    golden_lookup,
    golden_store,
    quadrature_moments,
)
from .sampler import (
    ExpMomentEstimate,
    MomentEstimates,
    SampleRun,
    SamplerConfig,
    SamplingError,
    conditional_resample,
    estimate_exp_moment,
    estimate_moments,
    sample_gibbs,
)
