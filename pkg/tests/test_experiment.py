import io
import itertools
import math
import statistics

import numpy as np
import pytest

from nstar.errors import ValidationError
from nstar.experiment import (
    ExperimentConfig, SizeSummary, TrialRecord, effective_dof, full_universe_trial,
    portfolio_variances, read_summary_csv, read_trials_csv, run_experiment, summarize_by_size,
    write_summary_csv, write_trials_csv,
)
from nstar.returns import ReturnPanel, daily_dates
from nstar.synthetic import IsotropicSpec, gen_isotropic


def make_panel(rows):
    rows = np.asarray(rows, dtype=float)
    names = [f"S{i}" for i in range(rows.shape[0])]
    return ReturnPanel(names, daily_dates("2024-01-02", rows.shape[1]), rows)


def brute_force(panel, subset):
    """(V_P, V_I, N*) with nothing but the statistics module."""
    rows = [[float(v) for v in panel.returns[panel.index_of(a)]] for a in subset]
    n = len(rows)
    portfolio = [sum(col) / n for col in zip(*rows)]
    v_i = sum(statistics.variance(r) for r in rows) / n**2
    v_p = statistics.variance(portfolio)
    return v_p, v_i, n * v_i / v_p


def expected_distinct(n_max, n_iter):
    # size-first sampling: each k-subset has probability 1 / (n_max * C(n_max, k))
    total = 0.0
    for k in range(1, n_max + 1):
        c = math.comb(n_max, k)
        total += c * (1 - (1 - 1 / (n_max * c)) ** n_iter)
    return total


class TestEffectiveDof:
    def test_examples(self):
        assert effective_dof(1, 3.3, 3.3) == 1.0
        assert effective_dof(12, 1.93, 15.64) == pytest.approx(1.4808, abs=5e-5)

    @pytest.mark.parametrize("v_i,v_p", [(0, 1), (1, 0), (-1, 1)])
    def test_rejects_nonpositive(self, v_i, v_p):
        with pytest.raises(ValidationError):
            effective_dof(2, v_i, v_p)


class TestPortfolioVariances:
    def test_single_asset(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=50)
        x = 3 * (x - x.mean()) / x.std(ddof=1)
        v_p, v_i = portfolio_variances(make_panel([x, x + 1]), ["S0"])
        assert v_p == pytest.approx(9.0) and v_i == pytest.approx(9.0)

    def test_identical_rows(self):
        x = np.array([1.0, -2.0, 0.5, 3.0])
        v = statistics.variance(x.tolist())
        v_p, v_i = portfolio_variances(make_panel([x, x]), ["S0", "S1"])
        assert v_p == pytest.approx(v) and v_i == pytest.approx(v / 2)

    def test_independent_assets(self):
        p = gen_isotropic(IsotropicSpec(n_assets=2, t_obs=100_000, rho=0.0, sigma=1.0), seed=5)
        v_p, v_i = portfolio_variances(p, p.assets)
        assert v_p == pytest.approx(0.5, abs=0.02)
        assert v_i == pytest.approx(0.5, abs=0.02)

    def test_unknown_asset(self):
        p = make_panel([[1, 2, 3]])
        with pytest.raises(ValidationError, match="NOPE"):
            portfolio_variances(p, ["NOPE"])

    def test_empty_subset(self):
        with pytest.raises(ValidationError):
            portfolio_variances(make_panel([[1, 2, 3]]), [])


class TestRunExperiment:
    def test_single_asset_universe(self):
        trials = run_experiment(make_panel([[1, 2, 4]]), ExperimentConfig(n_iter=10, seed=1))
        assert len(trials) == 1
        assert trials[0].n_star == 1.0

    @pytest.mark.parametrize("n_max", [2, 3, 4])
    def test_exhaustive_oracle(self, n_max):
        p = gen_isotropic(IsotropicSpec(n_assets=n_max, t_obs=80, rho=0.3), seed=n_max)
        trials = run_experiment(p, ExperimentConfig(n_iter=10_000, seed=3))
        assert len(trials) == 2**n_max - 1
        every = {s for k in range(1, n_max + 1) for s in itertools.combinations(p.assets, k)}
        assert {t.subset for t in trials} == every
        for t in trials:
            v_p, v_i, n_star = brute_force(p, t.subset)
            assert t.v_portfolio == pytest.approx(v_p, rel=1e-10)
            assert t.v_independent == pytest.approx(v_i, rel=1e-10)
            assert t.n_star == pytest.approx(n_star, rel=1e-10)

    def test_distinct_count_matches_collision_theory(self):
        p = gen_isotropic(IsotropicSpec(n_assets=14, t_obs=30, rho=0.4), seed=0)
        counts = [len(run_experiment(p, ExperimentConfig(n_iter=1000, seed=s))) for s in range(40)]
        expected = expected_distinct(14, 1000)
        assert expected == pytest.approx(747.65, abs=0.01)
        # sd of a single run is about 13, so the 40-run mean has sd about 2
        assert np.mean(counts) == pytest.approx(expected, abs=8)
        assert len(set(counts)) > 1

    def test_no_duplicate_subsets(self):
        p = gen_isotropic(IsotropicSpec(n_assets=6, t_obs=30, rho=0.4), seed=0)
        trials = run_experiment(p, ExperimentConfig(n_iter=500, seed=2))
        assert len({t.subset for t in trials}) == len(trials)

    def test_size_range(self):
        p = gen_isotropic(IsotropicSpec(n_assets=8, t_obs=30, rho=0.4), seed=0)
        trials = run_experiment(p, ExperimentConfig(n_iter=300, seed=2, size_range=(3, 5)))
        assert {t.size for t in trials} == {3, 4, 5}
        with pytest.raises(ValidationError):
            run_experiment(p, ExperimentConfig(n_iter=10, size_range=(2, 9)))

    def test_deterministic_serialization(self):
        p = gen_isotropic(IsotropicSpec(n_assets=10, t_obs=60, rho=0.4), seed=1)
        outputs = []
        for _ in range(2):
            buf = io.StringIO()
            write_trials_csv(run_experiment(p, ExperimentConfig(n_iter=700, seed=99)), buf)
            outputs.append(buf.getvalue())
        assert outputs[0] == outputs[1]
        buf = io.StringIO()
        write_trials_csv(run_experiment(p, ExperimentConfig(n_iter=700, seed=100)), buf)
        assert buf.getvalue() != outputs[0]

    def test_chunking_does_not_change_draws(self):
        # a longer run extends a shorter one with the same seed
        p = gen_isotropic(IsotropicSpec(n_assets=12, t_obs=30, rho=0.4), seed=1)
        short = run_experiment(p, ExperimentConfig(n_iter=200, seed=4))
        long = run_experiment(p, ExperimentConfig(n_iter=20_000, seed=4))  # spans two chunks
        assert long[:len(short)] == short

    def test_n_star_bounded_by_size(self):
        p = gen_isotropic(IsotropicSpec(n_assets=14, t_obs=500, rho=0.5), seed=8)
        trials = run_experiment(p, ExperimentConfig(n_iter=1000, seed=8))
        for s in summarize_by_size(trials):
            assert s.mean <= s.size + 3 * s.std_err

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(n_iter=0)
        with pytest.raises(ValidationError):
            ExperimentConfig(seed=-1)
        with pytest.raises(ValidationError):
            ExperimentConfig(size_range=(3, 2))


def test_full_universe_trial():
    p = gen_isotropic(IsotropicSpec(n_assets=5, t_obs=200, rho=0.4), seed=2)
    t = full_universe_trial(p)
    v_p, v_i, n_star = brute_force(p, p.assets)
    assert t.size == 5
    assert t.n_star == pytest.approx(n_star, rel=1e-12)


class TestSummaries:
    def test_size_one(self):
        trials = [TrialRecord((f"S{i}",), 1, 2.0, 2.0, 1.0) for i in range(4)]
        (s,) = summarize_by_size(trials)
        assert (s.mean, s.std_dev, s.count) == (1.0, 0.0, 4)

    def test_hand_example(self):
        trials = [TrialRecord(("A", "B"), 2, 1, 1, 1.2), TrialRecord(("A", "C"), 2, 1, 1, 1.4)]
        (s,) = summarize_by_size(trials)
        assert s.mean == pytest.approx(1.3)
        assert s.std_dev == pytest.approx(0.1414, abs=1e-4)
        assert s.std_err == pytest.approx(0.1)

    def test_single_observation_flagged(self):
        (s,) = summarize_by_size([TrialRecord(("A", "B"), 2, 1, 1, 1.7)])
        assert s.single and s.std_err == 0.0

    def test_empty(self):
        with pytest.raises(ValidationError):
            summarize_by_size([])

    def test_from_moments(self):
        s = SizeSummary.from_moments(2, 1.306, 0.143, 71)
        assert s.std_err == pytest.approx(0.017, abs=5e-4)


class TestCsv:
    def test_trials_round_trip(self):
        p = gen_isotropic(IsotropicSpec(n_assets=7, t_obs=50, rho=0.4), seed=3)
        trials = run_experiment(p, ExperimentConfig(n_iter=200, seed=3))
        buf = io.StringIO()
        write_trials_csv(trials, buf)
        buf.seek(0)
        assert read_trials_csv(buf) == trials

    def test_summary_round_trip(self, tmp_path):
        summaries = [SizeSummary.from_moments(k, 1 + 0.1 * k, 0.2, 10 + k) for k in range(1, 6)]
        path = tmp_path / "summary.csv"
        write_summary_csv(summaries, path)
        assert read_summary_csv(path) == summaries

    def test_summary_without_std_err(self):
        got = read_summary_csv(io.StringIO("size,mean,std_dev,count\n2,1.3,0.2,16\n"))
        assert got[0].std_err == pytest.approx(0.05)

    def test_bad_trials_header(self):
        with pytest.raises(ValidationError):
            read_trials_csv(io.StringIO("a,b\n1,2\n"))

    def test_bad_summary_row(self):
        with pytest.raises(ValidationError, match="line 2"):
            read_summary_csv(io.StringIO("size,mean,std_dev,count\n2,x,0.2,16\n"))
