"""PCA for multivariate time series with dependence-aware inference.

The package covers the full pipeline: second-moment estimation, symmetric
eigendecomposition with fixed conventions, spectral density estimation,
asymptotic covariances of the eigenstructure under three dependence
assumptions, moving block bootstrap standard errors, a Monte Carlo
comparison harness, and significance tests for loadings and variance
proportions.
"""

__version__ = "0.1.0"

from .asymcov import (
    ASSUMPTIONS,
    EigenAsymptotics,
    StandardErrors,
    asymptotics_ad,
    asymptotics_dag,
    asymptotics_ind,
    cov_u_gaussian,
    direct_estimate,
    standard_errors,
)
from .bootstrap import (
    BootstrapResult,
    MBBConfig,
    bootstrap_sd,
    default_block_size,
    mbb_resample,
)
from .dgp import (
    ContaminatedNoise,
    DGPSpec,
    GaussianNoise,
    PopulationTruth,
    SkewNormalNoise,
    StudentTNoise,
    draw_noise,
    fixture,
    fixture_checksum,
    fixture_json,
    population_truth,
    simulate,
)
from .eigen import (
    ConvergenceError,
    DegenerateEigenvaluesError,
    EigenDecomposition,
    NotSymmetricError,
    ProportionOfVariation,
    align_signs,
    eigendecompose,
    proportion_of_variation,
)
from .experiments import (
    ComparisonResult,
    MetricTable,
    MonteCarloSummary,
    delta_r,
    delta_star,
    delta_tilde,
    run_comparison,
    run_monte_carlo,
    write_comparison_outputs,
)
from .inference import (
    LoadingTable,
    LoadingTestResult,
    ProportionCI,
    loading_table,
    loading_test_json,
    proportion_ci,
    render_csv,
    render_text,
    test_loadings,
)
from .series import (
    AutocovarianceSequence,
    MultivariateSeries,
    autocovariance_sequence,
    sample_autocovariance,
    sample_covariance,
    sample_mean,
)
from .spectral import (
    SpectralDensityEstimate,
    TransferEvaluation,
    daniell_smooth,
    default_bandwidth,
    fourier_grid,
    integrate_over_frequency,
    model_spectral_density,
    raw_periodogram,
    rotate_spectrum,
    transfer_function,
)
