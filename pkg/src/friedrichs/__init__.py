"""Numerical laboratory for the N-level Friedrichs model with rational
form factors: exact self-energy, reduced resolvent, zero-energy
classification, reduced time evolution, long-time asymptotics, and a
brute-force discretization oracle.
"""

from .errors import (
    BorderlineClassification,
    BranchBoundary,
    BudgetExceeded,
    ClassificationMismatch,
    DegenerateCoupling,
    EigenvalueProximity,
    EmbeddedEigenvalue,
    FriedrichsError,
    InvalidInput,
    NonIntegrable,
    NonNormalizableMode,
    NonRationalProduct,
    PoleCollision,
    SchemaError,
    SingularOrigin,
    UndefinedSurvival,
)
from .polyrat import (
    DEFAULT_TOL,
    PoleDecomposition,
    PoleTerm,
    Polynomial,
    RationalFunction,
    Tolerances,
    partial_fractions,
    poly_roots,
)
from .model import (
    FormFactor,
    GammaMatrix,
    ModelSpec,
    ValidationReport,
    build_gamma,
    combination_gamma,
    gamma_small_expansion,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_model,
)
from .selfenergy import (
    ASeries,
    CauchyClosedForm,
    SelfEnergyEvaluator,
    boundary_values,
    cauchy_transform,
    halfline_integral,
    log_minus,
    moment_integral,
    second_sheet_self_energy,
    self_energy,
    self_energy_zero,
)
from .resolvent import (
    ResolventEvaluator,
    SpectralDensity,
    boundary_resolvent,
    find_negative_eigenvalues,
    find_resonance_poles,
    reduced_resolvent,
    scan_positive_spectrum,
    spectral_density,
)
from .classify import (
    CriticalCoupling,
    Kind,
    ThirdKindBlocks,
    ZeroEnergyClassification,
    ZeroMode,
    build_zero_mode,
    classify_zero_energy,
    critical_couplings,
    small_z_expansion_first_kind,
    small_z_expansion_second_kind,
    third_kind_blocks,
)
from .asymptotics import (
    AsymptoteModel,
    ProbeReport,
    build_asymptote_model,
    gamma_derivatives_at_one,
    log_decay_asymptote,
    log_fourier_series,
    power_law_asymptote,
    remainder_order_probe,
)
from .evolve import (
    CutoffFunction,
    PanelSet,
    SpectralWeight,
    TimeEvolutionResult,
    build_panel_set,
    oscillatory_integral,
    reduced_evolution,
    spectral_weight,
    survival_probability,
)
from .oracle import (
    ConvergenceReport,
    DiscretizedHamiltonian,
    convergence_study,
    discretize_state,
    oracle_evolution,
    oracle_principal_value,
    oracle_quadrature,
    oracle_resolvent,
)

__version__ = "0.1.0"
