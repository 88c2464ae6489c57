"""Full-universe N* and imputed correlation, stratified by calendar year."""

from dataclasses import dataclass, field
import csv
import datetime as dt
import io
import math

import numpy as np

from .errors import ValidationError
from .experiment import effective_dof, portfolio_variances
from .ingest import IngestLog, UniverseConfig, complete_case_panel, select_universe
from .returns import row_variances

MIN_YEAR_OBS = 30


def imputed_rho(n_max, n_star):
    """Common correlation implied by N* of an n_max-asset portfolio."""
    if n_max < 2:
        return math.nan
    return (n_max / n_star - 1.0) / (n_max - 1)


@dataclass(frozen=True)
class YearlyStats:
    year: int
    per_asset_variance: dict
    v_portfolio: float
    v_independent: float
    n_max: int
    n_star: float
    rho: float
    n_obs: int = 0
    short: bool = False  # fewer than MIN_YEAR_OBS returns

    @classmethod
    def from_variances(cls, year, v_portfolio, v_independent, n_max,
                       per_asset_variance=None, n_obs=0):
        """Derive N* and rho from the portfolio and independence variances."""
        n_star = effective_dof(n_max, v_independent, v_portfolio)
        return cls(
            year=int(year),
            per_asset_variance=dict(per_asset_variance or {}),
            v_portfolio=float(v_portfolio),
            v_independent=float(v_independent),
            n_max=int(n_max),
            n_star=n_star,
            rho=imputed_rho(n_max, n_star),
            n_obs=int(n_obs),
            short=0 < n_obs < MIN_YEAR_OBS,
        )


@dataclass(frozen=True)
class StabilitySummary:
    years: tuple
    mean: float
    std_dev: float  # nan when only one year
    std_err: float
    undefined_spread: bool = False


def stability_summary(stats, years=None):
    """Mean, standard deviation and standard error of N* across years."""
    chosen = [s for s in stats if years is None or s.year in set(years)]
    if not chosen:
        raise ValidationError("no years selected for the stability summary")
    values = np.array([s.n_star for s in chosen])
    yrs = tuple(s.year for s in chosen)
    if len(values) == 1:
        return StabilitySummary(yrs, float(values[0]), math.nan, math.nan, undefined_spread=True)
    sd = float(np.std(values, ddof=1))
    return StabilitySummary(yrs, float(values.mean()), sd, sd / math.sqrt(len(values)))


@dataclass(frozen=True)
class YearlyReport:
    stats: tuple
    stability: StabilitySummary
    skipped: dict = field(default_factory=dict)  # year -> reason


def _year_window(series, year):
    # prices dated in `year`, plus the last one before it so that the first
    # return of the year is measured from the previous close
    start = dt.date(year, 1, 1)
    keep = {d for d in series.dates if d.year == year}
    before = [d for d in series.dates if d < start]
    if keep and before:
        keep.add(before[-1])
    return series.restrict(keep)


def year_stats(series_map, year, min_prices=2):
    """Stats for one calendar year; returns are assigned to the year they end in."""
    window = {}
    for symbol, s in series_map.items():
        w = _year_window(s, year)
        if len(w) >= max(2, min_prices):
            window[symbol] = w
    panel = complete_case_panel(window)
    variances = row_variances(panel)
    v_p, v_i = portfolio_variances(panel, panel.assets)
    return YearlyStats.from_variances(
        year, v_p, v_i, panel.n_assets,
        per_asset_variance=dict(zip(panel.assets, variances.tolist())),
        n_obs=panel.n_dates,
    )


def yearly_report(series_map, config=None, years=None, stability_years=None,
                  ingest_log=None):
    """Per-year full-universe statistics and their stability summary.

    ``years`` defaults to every year with data. Years in which no complete
    panel can be formed are recorded in ``skipped``.
    """
    config = config if config is not None else UniverseConfig()
    ingest_log = ingest_log if ingest_log is not None else IngestLog()
    selected = select_universe(series_map, config, ingest_log)
    if years is None:
        years = sorted({d.year for s in selected.values() for d in s.dates})
    stats, skipped = [], {}
    for y in years:
        try:
            st = year_stats(selected, y, config.min_history_days)
        except ValidationError as exc:
            skipped[y] = str(exc)
            continue
        if st.short:
            ingest_log.warn(f"{y}: only {st.n_obs} returns (< {MIN_YEAR_OBS})")
        stats.append(st)
    if not stats:
        raise ValidationError(f"no year produced a valid panel: {skipped}")
    if stability_years is not None:
        stability_years = [y for y in stability_years if any(s.year == y for s in stats)]
    return YearlyReport(tuple(stats), stability_summary(stats, stability_years or None), skipped)


def table2_rows(stats):
    """Rows of the by-year table: one per asset, then the portfolio summaries."""
    symbols = sorted({a for s in stats for a in s.per_asset_variance})
    rows = []
    for a in symbols:
        rows.append([a] + [s.per_asset_variance.get(a) for s in stats])
    rows.append(["v_portfolio"] + [s.v_portfolio for s in stats])
    rows.append(["v_independent"] + [s.v_independent for s in stats])
    rows.append(["n_max"] + [s.n_max for s in stats])
    rows.append(["n_star"] + [s.n_star for s in stats])
    rows.append(["rho_percent"] + [100.0 * s.rho for s in stats])
    rows.append(["n_obs"] + [s.n_obs for s in stats])
    return rows


def write_table2_csv(stats, dest):
    def _fmt(v):
        if v is None:
            return ""
        return repr(float(v)) if isinstance(v, float) else str(v)

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity"] + [str(s.year) for s in stats])
        for row in table2_rows(stats):
            w.writerow([row[0]] + [_fmt(v) for v in row[1:]])

    if isinstance(dest, io.TextIOBase):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)
