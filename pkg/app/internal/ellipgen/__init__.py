"""
Meta-elliptical copula generator estimation library.

Provides tabulated density generators, their normalization and marginal
laws, elliptical sampling and kernel generator estimators, copula tools,
the iterative MECIP estimator, simulation-based parametric fitting and a
Monte-Carlo experiment harness.

Usage:
    from app.internal.ellipgen import DataMatrix, EllipGenFacade, MecipConfig

    facade = EllipGenFacade()
    result = facade.estimate(data, MecipConfig.for_dimension(data.d))
    print(result.g_final.values, result.converged)
"""

# Configuration
from .config import (
    DEFAULT_BANDWIDTHS,
    DensityKind,
    DiscrepancyConfig,
    DiscrepancyKind,
    EstimatorKind,
    FamilyId,
    GeneratorId,
    InitMethod,
    KernelConfig,
    MecipConfig,
    SigmaKind,
    default_bandwidth,
)

# Exceptions and warnings
from .exceptions import (
    BoundaryWarning,
    ClampWarning,
    ConfigurationError,
    DataInvariantError,
    DataParseError,
    DegenerateColumnError,
    EllipGenError,
    EllipGenWarning,
    FactorizationError,
    GridMismatchError,
    GridTooShortError,
    InadmissibleThetaError,
    InfeasibleSigmaError,
    InsufficientPairsError,
    NormalizationError,
    OutOfDomainError,
    ProjectionWarning,
    SingularBlockError,
    SingularSigmaError,
    TailMassWarning,
    TooManyMissingError,
    ZeroGeneratorError,
)

# Tabulated functions and matrices
from .tabulated import DEFAULT_GRID, TabulatedFunction, UniformGrid
from .matrices import (
    CorrMatrix,
    DataMatrix,
    PseudoObs,
    feasibility_bound,
    structured_corr,
)

# Generators
from .generator import (
    Generator,
    MarginalLaw,
    NormalizedGenerator,
    gaussian_generator,
    marginal_cdf,
    marginal_density,
    marginal_law,
    marginal_quantile,
    moment_integrals,
    normalize,
    scale_generator,
    subvector_generator,
    surface_area,
    tail_fraction,
)

# Elliptical laws
from .elliptical import (
    EllipticalModel,
    GeneratorEstimator,
    LiebscherEstimator,
    ModularLaw,
    StuteWernerEstimator,
    conditional_model,
    liebscher_estimate,
    modular_law,
    psi_a,
    psi_a_prime,
    sample_elliptical,
    stute_werner_estimate,
)

# Copulas
from .copula import (
    copula_density,
    corr_from_tau,
    kendall_tau_matrix,
    project_psd,
    pseudo_observations,
    sample_meta_elliptical,
)

# Estimation
from .mecip import (
    MecipResult,
    MecipState,
    impute_missing,
    initialize,
    mecip_estimate,
    mecip_step,
)
from .simfit import ParametricFamily, discrepancy, empirical_copula, simfit_estimate
from .simstudy import builtin_generators, inject_missing, mise, run_experiment, truth_generator

# Records
from .models import (
    ExperimentSpec,
    FitRecord,
    GeneratorSidecar,
    MecipDiagnostics,
    MiseRecord,
    Provenance,
    ReplicationRecord,
)

# Facade
from .facade import EllipGenFacade


__all__ = [
    # Configuration
    "DEFAULT_BANDWIDTHS",
    "DensityKind",
    "DiscrepancyConfig",
    "DiscrepancyKind",
    "EstimatorKind",
    "FamilyId",
    "GeneratorId",
    "InitMethod",
    "KernelConfig",
    "MecipConfig",
    "SigmaKind",
    "default_bandwidth",
    # Exceptions and warnings
    "BoundaryWarning",
    "ClampWarning",
    "ConfigurationError",
    "DataInvariantError",
    "DataParseError",
    "DegenerateColumnError",
    "EllipGenError",
    "EllipGenWarning",
    "FactorizationError",
    "GridMismatchError",
    "GridTooShortError",
    "InadmissibleThetaError",
    "InfeasibleSigmaError",
    "InsufficientPairsError",
    "NormalizationError",
    "OutOfDomainError",
    "ProjectionWarning",
    "SingularBlockError",
    "SingularSigmaError",
    "TailMassWarning",
    "TooManyMissingError",
    "ZeroGeneratorError",
    # Tabulated functions and matrices
    "DEFAULT_GRID",
    "TabulatedFunction",
    "UniformGrid",
    "CorrMatrix",
    "DataMatrix",
    "PseudoObs",
    "feasibility_bound",
    "structured_corr",
    # Generators
    "Generator",
    "MarginalLaw",
    "NormalizedGenerator",
    "gaussian_generator",
    "marginal_cdf",
    "marginal_density",
    "marginal_law",
    "marginal_quantile",
    "moment_integrals",
    "normalize",
    "scale_generator",
    "subvector_generator",
    "surface_area",
    "tail_fraction",
    # Elliptical laws
    "EllipticalModel",
    "GeneratorEstimator",
    "LiebscherEstimator",
    "ModularLaw",
    "StuteWernerEstimator",
    "conditional_model",
    "liebscher_estimate",
    "modular_law",
    "psi_a",
    "psi_a_prime",
    "sample_elliptical",
    "stute_werner_estimate",
    # Copulas
    "copula_density",
    "corr_from_tau",
    "kendall_tau_matrix",
    "project_psd",
    "pseudo_observations",
    "sample_meta_elliptical",
    # Estimation
    "MecipResult",
    "MecipState",
    "impute_missing",
    "initialize",
    "mecip_estimate",
    "mecip_step",
    "ParametricFamily",
    "discrepancy",
    "empirical_copula",
    "simfit_estimate",
    "builtin_generators",
    "inject_missing",
    "mise",
    "run_experiment",
    "truth_generator",
    # Records
    "ExperimentSpec",
    "FitRecord",
    "GeneratorSidecar",
    "MecipDiagnostics",
    "MiseRecord",
    "Provenance",
    "ReplicationRecord",
    # Facade
    "EllipGenFacade",
]
