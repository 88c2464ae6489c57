"""End-to-end comparison of the isotropic and factor curves.

The steps are: sample portfolios, summarise by size, pin the isotropic curve
to the full-universe N*, fit the factor curve, then chi-square both against
the per-size means and F-test one against the other.
"""

from dataclasses import dataclass

from .experiment import ExperimentConfig, full_universe_trial, run_experiment, summarize_by_size
from .inference import equivalence_test, goodness_of_fit, table1_rows
from .models import factor_asymptote, fit_factor_curve, impute_isotropic


@dataclass(frozen=True)
class Comparison:
    summaries: tuple
    n_max: int
    anchor_n_star: float
    isotropic: object  # IsotropicModel
    factor_fit: object  # FactorFit
    imputed_k: int
    iso_report: object  # TestReport
    factor_report: object
    equivalence: object  # EquivalenceResult

    def table1(self):
        return table1_rows(self.summaries, self.isotropic, self.factor_fit.curve,
                           self.iso_report, self.factor_report)


def compare_models(summaries, n_max, anchor_n_star, test_sizes=None, fit_sizes=None,
                   weighted_fit=False, max_iterations=500, tolerance=1e-10):
    """Test both curves against per-size summaries.

    ``anchor_n_star`` is N* of the portfolio holding all ``n_max`` assets.
    """
    iso = impute_isotropic(n_max, anchor_n_star)
    k, _ = factor_asymptote(n_max, n_max, anchor_n_star)
    fit = fit_factor_curve(summaries, fit_sizes=fit_sizes, n_max=n_max, weighted=weighted_fit,
                           max_iterations=max_iterations, tolerance=tolerance)
    iso_report = goodness_of_fit(summaries, iso, included_sizes=test_sizes, n_params=0,
                                 n_max=n_max, label="isotropic")
    fac_report = goodness_of_fit(summaries, fit.curve, included_sizes=test_sizes, n_params=3,
                                 n_max=n_max, label="factor")
    return Comparison(
        summaries=tuple(summaries),
        n_max=n_max,
        anchor_n_star=anchor_n_star,
        isotropic=iso,
        factor_fit=fit,
        imputed_k=k,
        iso_report=iso_report,
        factor_report=fac_report,
        equivalence=equivalence_test(fac_report, iso_report),
    )


def analyze_panel(panel, experiment=None, **kwargs):
    """Run the sampling experiment on ``panel`` and compare the two models.

    Returns ``(trials, comparison)``. The anchor is computed directly from
    the all-asset portfolio, whether or not the experiment happened to draw it.
    """
    experiment = experiment if experiment is not None else ExperimentConfig()
    trials = run_experiment(panel, experiment)
    summaries = summarize_by_size(trials)
    anchor = full_universe_trial(panel).n_star
    return trials, compare_models(summaries, panel.n_assets, anchor, **kwargs)
