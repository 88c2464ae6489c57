import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import least_squares

from nstar.errors import ConvergenceError, ValidationError
from nstar.experiment import SizeSummary
from nstar.models import (
    FactorCurve, factor_asymptote, factor_curve_nstar, fit_factor_curve, impute_isotropic,
    isotropic_limit, isotropic_nstar, model_curve_rows, write_model_curves_csv,
)


class TestIsotropic:
    def test_examples(self):
        assert isotropic_nstar(9, 0.0) == 9
        assert isotropic_nstar(1, 0.77) == 1
        assert isotropic_nstar(2, 0.4725) == pytest.approx(1.358, abs=5e-4)

    def test_rejects_invalid_rho(self):
        with pytest.raises(ValidationError):
            isotropic_nstar(3, -0.6)
        with pytest.raises(ValidationError):
            isotropic_nstar(3, 1.1)
        assert isotropic_nstar(3, -0.5) == math.inf

    def test_impute_examples(self):
        assert impute_isotropic(14, 1.96).rho == pytest.approx(0.4725, abs=5e-5)
        # the printed 64.59% comes from the unrounded N*; 1.48 itself gives 64.62%
        assert impute_isotropic(12, 1.48).rho == pytest.approx(0.6459, abs=5e-4)
        assert impute_isotropic(7, 7).rho == 0.0

    @pytest.mark.parametrize("anchor", [0, -1, 0.5, 14.5])
    def test_impute_rejects(self, anchor):
        with pytest.raises(ValidationError):
            impute_isotropic(14, anchor)

    def test_limit(self):
        assert isotropic_limit(0.5) == 2.0
        assert isotropic_limit(0.4725) == pytest.approx(2.116, abs=5e-4)
        assert isotropic_limit(1.0) == 1.0
        with pytest.raises(ValidationError):
            isotropic_limit(0.0)

    @settings(max_examples=300, deadline=None)
    @given(st.integers(2, 200), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_monotone_in_rho(self, n, r1, r2):
        lo, hi = sorted((r1, r2))
        assert isotropic_nstar(n, hi) <= isotropic_nstar(n, lo) + 1e-12

    @settings(max_examples=300, deadline=None)
    @given(st.integers(2, 100), st.floats(1.0, 100.0))
    def test_impute_round_trip(self, n_max, anchor):
        anchor = min(anchor, n_max)
        model = impute_isotropic(n_max, anchor)
        assert model(1) == 1.0
        assert model(n_max) == pytest.approx(anchor, rel=1e-12)


class TestFactorCurve:
    def test_a_equals_c(self):
        for n in (1, 5, 40):
            assert factor_curve_nstar(n, FactorCurve(0.3, 0.3, 2.0)) == pytest.approx(n)

    def test_table_values(self):
        curve = FactorCurve(0.0, 0.4118, 1.0)
        assert factor_curve_nstar(1, curve) == pytest.approx(0.708, abs=5e-4)
        assert factor_curve_nstar(2, curve) == pytest.approx(1.096, abs=1e-3)

    def test_degenerate(self):
        with pytest.raises(ValidationError):
            FactorCurve(1.0, 0.0, 0.0)
        with pytest.raises(ValidationError):
            FactorCurve(-1.0, 1.0, 1.0)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0, 10), st.floats(0.01, 10), st.floats(0.01, 10),
           st.floats(1e-3, 1e3), st.integers(1, 500))
    def test_scale_ray(self, a, c, d, lam, n):
        curve = FactorCurve(a, c, d)
        assert factor_curve_nstar(n, curve.scaled(lam)) == pytest.approx(
            factor_curve_nstar(n, curve), rel=1e-12)

    def test_linear_divergence(self):
        curve = FactorCurve(0.2, 0.6, 1.0)
        assert factor_curve_nstar(10**6, curve) / 10**6 == pytest.approx(0.2 / 0.6, rel=0.01)

    def test_bounded_without_a(self):
        curve = FactorCurve(0.0, 0.5, 1.0)
        values = [factor_curve_nstar(n, curve) for n in range(1, 500)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] < 1 / 0.5

    def test_asymptote(self):
        k, _ = factor_asymptote(14, 14, 1.96)
        assert k == 7
        assert factor_asymptote(7, 14, 1.96)[1] == pytest.approx(0.98)
        assert factor_asymptote(14, 14, 1.96)[1] == pytest.approx(1.96)


def exact_summaries(a, c, sizes, se=1e-6):
    return [SizeSummary(n, n * (a * n + 1) / (c * n + 1), se * math.sqrt(50), 50, se)
            for n in sizes]


class TestFit:
    def test_table1(self, size_table, size_summaries):
        fit = fit_factor_curve(size_summaries, n_max=14)
        assert fit.sizes == tuple(range(2, 14))
        for row in size_table:
            n = int(row["size"])
            assert fit.curve(n) == pytest.approx(row["factor_model"], abs=0.01)
        assert abs(fit.a_over_d) <= fit.a_over_d_se
        assert fit.c_over_d == pytest.approx(0.41211, abs=1e-4)

    def test_scipy_oracle(self, size_summaries):
        fit = fit_factor_curve(size_summaries, n_max=14)
        n = np.arange(2, 14, dtype=float)
        y = np.array([s.mean for s in size_summaries if 2 <= s.size <= 13])
        ref = least_squares(lambda p: n * (p[0] * n + 1) / (p[1] * n + 1) - y, [0.1, 0.5],
                            bounds=([0, 0], [np.inf, np.inf]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        assert fit.a_over_d == pytest.approx(ref.x[0], abs=1e-7)
        assert fit.c_over_d == pytest.approx(ref.x[1], abs=1e-7)
        assert fit.loss == pytest.approx(np.sum(ref.fun**2), rel=1e-8)

    def test_weighted_oracle(self, size_summaries):
        fit = fit_factor_curve(size_summaries, n_max=14, weighted=True)
        rows = [s for s in size_summaries if 2 <= s.size <= 13]
        n = np.array([s.size for s in rows], dtype=float)
        y = np.array([s.mean for s in rows])
        e = np.array([s.std_err for s in rows])
        ref = least_squares(lambda p: (n * (p[0] * n + 1) / (p[1] * n + 1) - y) / e, [0.1, 0.5],
                            bounds=([0, 0], [np.inf, np.inf]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        assert fit.a_over_d == pytest.approx(ref.x[0], abs=1e-6)
        assert fit.c_over_d == pytest.approx(ref.x[1], abs=1e-6)

    @pytest.mark.parametrize("a,c", [(0.05, 0.3), (0.2, 0.9), (0.01, 0.05), (1.0, 2.0)])
    def test_round_trip(self, a, c):
        fit = fit_factor_curve(exact_summaries(a, c, range(1, 15)), n_max=14, weighted=True)
        assert fit.a_over_d == pytest.approx(a, rel=1e-6)
        assert fit.c_over_d == pytest.approx(c, rel=1e-6)

    def test_too_few_sizes(self):
        with pytest.raises(ValidationError):
            fit_factor_curve(exact_summaries(0.1, 0.3, range(1, 5)), n_max=4)

    def test_zero_std_err(self):
        rows = exact_summaries(0.1, 0.3, range(1, 9))
        rows[3] = SizeSummary(rows[3].size, rows[3].mean, 0.0, 1, 0.0, single=True)
        with pytest.raises(ValidationError):
            fit_factor_curve(rows, n_max=8, weighted=True)

    def test_iteration_budget(self, size_summaries):
        with pytest.raises(ConvergenceError) as info:
            fit_factor_curve(size_summaries, n_max=14, max_iterations=1)
        assert isinstance(info.value.best, FactorCurve)

    def test_values(self, size_summaries):
        fit = fit_factor_curve(size_summaries, n_max=14)
        assert set(fit.values()) == set(range(2, 14))
        assert fit.values([1])[1] == pytest.approx(0.7082, abs=1e-4)


def test_model_curve_csv(size_summaries):
    iso = impute_isotropic(14, 1.96)
    fit = fit_factor_curve(size_summaries, n_max=14)
    rows = model_curve_rows(14, iso, fit.curve, 1.96)
    assert len(rows) == 14
    buf = io.StringIO()
    write_model_curves_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "n,isotropic_value,factor_fit_value,asymptote_value"
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == 14 and last[1] == pytest.approx(1.96) and last[3] == pytest.approx(1.96)
