"""Secrecy capacity of threshold-detected OOK free-space optical links under
correlated log-normal fading."""

from .average import (
    EstimateMethod,
    EstimateWithError,
    ScenarioConfig,
    average_secrecy_capacity_exact,
    average_secrecy_lower_bound,
    exact_vs_lower_bound,
    monte_carlo_lower_bound,
)
from .channel import (
    CapacityResult,
    CrossoverPair,
    InputDistribution,
    LinkParams,
    channel_capacity_fixed_fading,
    crossover_given_threshold,
    halfway_crossover,
    link_from_budget,
    mutual_information,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    EstimationError,
    FsoSecrecyError,
    NumericError,
)
from .fading import (
    CorrelatedFadingPair,
    LogNormalFading,
    TurbulenceBudget,
    joint_lognormal_pdf,
    lognormal_pdf,
    rho_from_rho_h,
    rho_h_from_rho,
    rytov_variance,
    sample_fading_pair,
)
from .mathcore import (
    IntegrationResult,
    MaximizeResult,
    OptimizerSpec,
    QuadratureSpec,
    binary_entropy,
    erfc,
    integrate_2d,
    maximize_scalar,
    positive_part,
)
from .secrecy import (
    FadingPairRealization,
    Method,
    SecrecyResult,
    awgn_secrecy_lower_bound,
    instantaneous_lower_bound,
    instantaneous_secrecy_capacity,
    secrecy_rate_fixed_thresholds,
    verify_lemma1,
)

__version__ = "0.1.0"
