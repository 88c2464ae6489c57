"""Effective degrees of freedom of random equal-weighted portfolios.

Measures how portfolio variance accumulates as assets are added, N*(N), and
tests whether that signature looks like an isotropic correlation structure
or a linear factor model.
"""

from .errors import ConvergenceError, ValidationError
from .returns import (
    CorrelationCensus, PriceSeries, ReturnPanel, mid_price, pairwise_correlation_census,
    sample_variance, to_returns,
)
from .experiment import (
    ExperimentConfig, SizeSummary, TrialRecord, effective_dof, full_universe_trial,
    portfolio_variances, run_experiment, summarize_by_size,
)
from .models import (
    FactorCurve, FactorFit, IsotropicModel, factor_asymptote, factor_curve_nstar,
    fit_factor_curve, impute_isotropic, isotropic_limit, isotropic_nstar,
)
from .special import betainc, chi2_sf, f_sf, gammainc_lower, gammainc_upper
from .inference import EquivalenceResult, TestReport, equivalence_test, goodness_of_fit
from .synthetic import (
    FactorSpec, IsotropicSpec, block_loadings, gen_factor, gen_isotropic,
    isotropic_covariance_matrix,
)
from .ingest import (
    UniverseConfig, build_panel, parse_daily_bars, parse_quote_snapshots, read_panel_csv,
    write_panel_csv,
)
from .yearly import YearlyStats, stability_summary, yearly_report
from .pipeline import analyze_panel, compare_models

regularized_incomplete_beta = betainc

__version__ = "0.1.0"
