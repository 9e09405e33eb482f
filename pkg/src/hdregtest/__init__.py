"""Scale-invariant simultaneous tests for high-dimensional regression coefficients."""

from .estimators import NuisanceEstimates, diag_sample_variances, sigma2_hat, trace_estimates
from .model import (
    DegenerateInputError,
    DiagScaling,
    DomainError,
    NotApplicableError,
    RegressionSample,
    ResidualVector,
    SingularScalingError,
    TestReport,
    ValidationError,
    load_sample,
    residuals,
)
from .power import (
    PowerInputs,
    PowerQuantities,
    are_case_iii,
    fixed_alt_power,
    fixed_alt_variance_A1,
    fixed_alt_variance_A2,
    local_power_sf,
    local_power_zc,
    power_quantities,
)
from .procedures import TestConfig, eb_test, f_test, run_test, sf_test, zc_test
from .simulation import GeneratorConfig, MonteCarloResult, run_cell, run_grid
from .special import normal_upper_quantile
from .ustat import tn_core_bruteforce, tn_core_fast, trace_r2_bruteforce, trace_r2_fast

__version__ = "0.1.0"
