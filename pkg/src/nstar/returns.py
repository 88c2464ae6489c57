"""Prices to returns, and the basic cross-sectional statistics of a return panel."""

from dataclasses import dataclass, field
import datetime as dt
import math

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class PriceSeries:
    """Dated mid-prices for one asset. Dates are UTC calendar dates."""

    asset: str
    dates: tuple
    prices: tuple

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", tuple(float(p) for p in self.prices))
        if len(self.dates) != len(self.prices):
            raise ValidationError(
                f"{self.asset}: {len(self.dates)} dates but {len(self.prices)} prices"
            )
        for d0, d1 in zip(self.dates, self.dates[1:]):
            if not d1 > d0:
                raise ValidationError(f"{self.asset}: dates not strictly increasing at {d1}")
        for d, p in zip(self.dates, self.prices):
            if not (math.isfinite(p) and p > 0):
                raise ValidationError(f"{self.asset}: non-positive or non-finite price {p} on {d}")

    def __len__(self):
        return len(self.dates)

    def restrict(self, keep):
        """Series limited to the dates in ``keep`` (any container of dates)."""
        pairs = [(d, p) for d, p in zip(self.dates, self.prices) if d in keep]
        return PriceSeries(self.asset, [d for d, _ in pairs], [p for _, p in pairs])


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """Complete assets x dates matrix of daily simple returns, in percent.

    ``returns[i, t]`` is the return of ``assets[i]`` over the interval ending
    on ``dates[t]``.
    """

    assets: tuple
    dates: tuple
    returns: np.ndarray = field(repr=False)

    def __post_init__(self):
        assets = tuple(str(a) for a in self.assets)
        dates = tuple(self.dates)
        r = np.array(self.returns, dtype=float, copy=True)
        if r.ndim == 1:
            r = r.reshape(1, -1)
        if r.ndim != 2:
            raise ValidationError(f"returns must be a 2-d matrix, got shape {r.shape}")
        if len(assets) < 1:
            raise ValidationError("panel needs at least one asset")
        if len(set(assets)) != len(assets):
            raise ValidationError("duplicate asset identifiers in panel")
        if r.shape != (len(assets), len(dates)):
            raise ValidationError(
                f"returns shape {r.shape} does not match {len(assets)} assets x {len(dates)} dates"
            )
        if len(dates) < 2:
            raise ValidationError(f"panel needs at least 2 dates, got {len(dates)}")
        if not np.all(np.isfinite(r)):
            raise ValidationError("panel has missing or non-finite cells")
        r.flags.writeable = False
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "returns", r)

    @property
    def n_assets(self):
        return len(self.assets)

    @property
    def n_dates(self):
        return len(self.dates)

    def index_of(self, asset):
        try:
            return self.assets.index(asset)
        except ValueError:
            raise ValidationError(f"asset {asset!r} not in panel") from None

    def select(self, assets):
        """Sub-panel with the given assets, in the given order."""
        rows = [self.index_of(a) for a in assets]
        return ReturnPanel(tuple(assets), self.dates, self.returns[rows])

    def __eq__(self, other):
        if not isinstance(other, ReturnPanel):
            return NotImplemented
        return (
            self.assets == other.assets
            and self.dates == other.dates
            and np.array_equal(self.returns, other.returns)
        )

    __hash__ = None


@dataclass(frozen=True)
class CorrelationCensus:
    """Every pairwise Pearson correlation in a panel."""

    pairs: tuple  # (asset_i, asset_j, rho_ij), i < j in panel order
    mean_rho: float
    fisher_se: float
    histogram: tuple  # (bin_lower, bin_upper, count)
    n_obs: int

    @property
    def values(self):
        return np.array([p[2] for p in self.pairs])


class QuoteDiagnostics:
    """Counts quote anomalies seen by :func:`mid_price`."""

    def __init__(self):
        self.crossed = 0

    def __repr__(self):
        return f"QuoteDiagnostics(crossed={self.crossed})"


def mid_price(bid, ask, diagnostics=None):
    """Midpoint of a bid/ask quote.

    Crossed quotes (bid > ask) still have a well-defined midpoint and are
    accepted; they are tallied on ``diagnostics`` when one is given.
    """
    bid = float(bid)
    ask = float(ask)
    for name, v in (("bid", bid), ("ask", ask)):
        if not (math.isfinite(v) and v > 0):
            raise ValidationError(f"{name} must be positive and finite, got {v}")
    if bid > ask and diagnostics is not None:
        diagnostics.crossed += 1
    return (bid + ask) / 2.0


def to_returns(series):
    """Simple percent returns between consecutive observations.

    Returns a list of ``(date, return)`` with one fewer element than the
    series; each return is dated by the later of its two prices.
    """
    if len(series) < 2:
        raise ValidationError(
            f"{series.asset}: need at least 2 prices to form a return, got {len(series)}"
        )
    p = np.asarray(series.prices)
    r = 100.0 * (p[1:] / p[:-1] - 1.0)
    return list(zip(series.dates[1:], r.tolist()))


def sample_variance(x):
    """Unbiased sample variance (divisor n - 1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValidationError(f"need at least 2 values for a sample variance, got {x.size}")
    return float(np.var(x, ddof=1))


def row_variances(panel):
    """Sample variance of every asset in the panel."""
    return np.var(panel.returns, axis=1, ddof=1)


def fisher_standard_error(n_obs):
    """Approximate standard error of a sample correlation from ``n_obs`` pairs.

    Infinite at exactly 3 observations.
    """
    if n_obs < 3:
        raise ValidationError(f"Fisher standard error needs at least 3 observations, got {n_obs}")
    if n_obs == 3:
        return math.inf
    return 1.0 / math.sqrt(n_obs - 3)


def pairwise_correlation_census(panel, bins=20):
    """Enumerate all N(N-1)/2 pairwise correlations of a panel.

    The histogram spans [-1, 1] in ``bins`` equal-width bins.
    """
    if bins < 1:
        raise ValidationError(f"bins must be positive, got {bins}")
    if panel.n_assets < 2:
        raise ValidationError("correlation census needs at least 2 assets")
    if panel.n_dates < 3:
        raise ValidationError(
            f"correlation census needs at least 3 observations, got {panel.n_dates}"
        )
    r = panel.returns
    centered = r - r.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.sum(centered * centered, axis=1))
    for asset, nrm in zip(panel.assets, norms):
        if nrm == 0:
            raise ValidationError(f"asset {asset!r} has constant returns; correlation undefined")
    z = centered / norms[:, None]
    corr = np.clip(z @ z.T, -1.0, 1.0)

    pairs = []
    n = panel.n_assets
    for i in range(n):
        for j in range(i + 1, n):
            pairs.append((panel.assets[i], panel.assets[j], float(corr[i, j])))
    values = np.array([p[2] for p in pairs])
    counts, edges = np.histogram(values, bins=bins, range=(-1.0, 1.0))
    histogram = tuple(
        (float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)
    )
    return CorrelationCensus(
        pairs=tuple(pairs),
        mean_rho=float(values.mean()),
        fisher_se=fisher_standard_error(panel.n_dates),
        histogram=histogram,
        n_obs=panel.n_dates,
    )


def daily_dates(start, count):
    """``count`` consecutive calendar dates beginning at ``start``."""
    if isinstance(start, str):
        start = dt.date.fromisoformat(start)
    return tuple(start + dt.timedelta(days=k) for k in range(count))
