"""Reading quote snapshots and daily bars, and assembling complete return panels.

File formats (all CSV, decimal point, no thousands separators):

* snapshots: ``timestamp,symbol,bid,ask`` with RFC 3339 timestamps
* daily bars: ``date,symbol,close`` with ``YYYY-MM-DD`` dates
* panels: ``date,<symbol1>,<symbol2>,...`` with percent returns in the cells
"""

from dataclasses import dataclass, field
import csv
import datetime as dt
import io
import logging
import math

import numpy as np

from .errors import ValidationError
from .returns import PriceSeries, QuoteDiagnostics, ReturnPanel, mid_price, to_returns

log = logging.getLogger(__name__)

SNAPSHOT_HEADER = ("timestamp", "symbol", "bid", "ask")
BARS_HEADER = ("date", "symbol", "close")
TRIM_DAYS = 365


@dataclass
class IngestLog:
    """Counters and messages collected while reading or filtering data."""

    duplicates: int = 0
    rejected_rows: int = 0
    crossed_quotes: int = 0
    excluded: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def warn(self, msg):
        self.warnings.append(msg)
        log.warning(msg)


@dataclass(frozen=True)
class UniverseConfig:
    include: tuple = None  # None keeps every symbol not excluded
    exclude: dict = field(default_factory=dict)  # symbol -> reason
    trim_first_year: bool = False
    min_history_days: int = 0

    def __post_init__(self):
        if self.include is not None:
            object.__setattr__(self, "include", tuple(self.include))
        exclude = self.exclude
        if not isinstance(exclude, dict):
            exclude = {s: "" for s in exclude}
        object.__setattr__(self, "exclude", dict(exclude))
        if self.min_history_days < 0:
            raise ValidationError(f"min_history_days must be >= 0, got {self.min_history_days}")
        if self.include is not None:
            both = set(self.include) & set(self.exclude)
            if both:
                raise ValidationError(f"symbols both included and excluded: {sorted(both)}")


def parse_timestamp(text):
    """RFC 3339 timestamp with an explicit offset, converted to UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = dt.datetime.fromisoformat(text.replace(" ", "T", 1))
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    return ts.astimezone(dt.timezone.utc)


def _open_text(src):
    if isinstance(src, io.TextIOBase):
        return src, False
    return open(src, newline=""), True


def _check_header(header, expected, what):
    got = tuple(h.strip() for h in header)
    if got != expected:
        raise ValidationError(f"{what} header must be {','.join(expected)}, got {','.join(got)}")


def parse_quote_snapshots(src, ingest_log=None):
    """Daily mid-prices from intraday bid/ask snapshots.

    For each symbol and UTC date the latest snapshot of that date is used.
    Dates without any snapshot are simply absent.
    """
    ingest_log = ingest_log if ingest_log is not None else IngestLog()
    fh, close = _open_text(src)
    latest = {}  # (symbol, date) -> (timestamp, bid, ask)
    seen = {}
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            ingest_log.warn("snapshot file is empty")
            return {}
        _check_header(header, SNAPSHOT_HEADER, "snapshot")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValidationError(f"line {line}: expected 4 fields, got {len(row)}")
            try:
                ts = parse_timestamp(row[0])
                symbol = row[1].strip()
                bid, ask = float(row[2]), float(row[3])
            except ValueError as exc:
                raise ValidationError(f"line {line}: {exc}") from None
            if not symbol:
                raise ValidationError(f"line {line}: empty symbol")
            for name, v in (("bid", bid), ("ask", ask)):
                if not (math.isfinite(v) and v > 0):
                    raise ValidationError(f"line {line}: {name} must be positive, got {v}")
            if (symbol, ts) in seen:
                ingest_log.duplicates += 1
            seen[(symbol, ts)] = line
            key = (symbol, ts.date())
            prev = latest.get(key)
            # ties on timestamp: the later row wins
            if prev is None or ts >= prev[0]:
                latest[key] = (ts, bid, ask)
    finally:
        if close:
            fh.close()
    if ingest_log.duplicates:
        ingest_log.warn(f"{ingest_log.duplicates} duplicate (symbol, timestamp) rows; last kept")

    diag = QuoteDiagnostics()
    by_symbol = {}
    for (symbol, day), (_, bid, ask) in latest.items():
        by_symbol.setdefault(symbol, []).append((day, mid_price(bid, ask, diag)))
    ingest_log.crossed_quotes += diag.crossed
    if diag.crossed:
        ingest_log.warn(f"{diag.crossed} crossed quotes (bid > ask) among selected snapshots")
    return {
        s: PriceSeries(s, [d for d, _ in sorted(obs)], [p for _, p in sorted(obs)])
        for s, obs in sorted(by_symbol.items())
    }


def parse_daily_bars(src, ingest_log=None):
    """One closing price per symbol and date."""
    ingest_log = ingest_log if ingest_log is not None else IngestLog()
    fh, close = _open_text(src)
    by_symbol = {}
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            ingest_log.warn("daily bar file is empty")
            return {}
        _check_header(header, BARS_HEADER, "daily bar")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValidationError(f"line {line}: expected 3 fields, got {len(row)}")
            try:
                day = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise ValidationError(f"line {line}: unparseable date {row[0]!r}") from None
            symbol = row[1].strip()
            try:
                price = float(row[2])
            except ValueError:
                raise ValidationError(f"line {line}: unparseable close {row[2]!r}") from None
            if not (math.isfinite(price) and price > 0):
                ingest_log.rejected_rows += 1
                ingest_log.warn(f"line {line}: non-positive close {row[2]!r} for {symbol}; row rejected")
                continue
            obs = by_symbol.setdefault(symbol, {})
            if day in obs:
                ingest_log.duplicates += 1
            obs[day] = price
    finally:
        if close:
            fh.close()
    if not by_symbol:
        ingest_log.warn("daily bar file has no usable rows")
    return {
        s: PriceSeries(s, sorted(obs), [obs[d] for d in sorted(obs)])
        for s, obs in sorted(by_symbol.items())
    }


def write_daily_bars(series_map, dest):
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BARS_HEADER)
        for symbol, s in sorted(series_map.items()):
            for d, p in zip(s.dates, s.prices):
                w.writerow([d.isoformat(), symbol, repr(p)])

    if isinstance(dest, io.TextIOBase):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)


def write_panel_csv(panel, dest):
    """Write a return panel; floats are written in shortest round-trip form."""
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("date",) + panel.assets)
        for t, d in enumerate(panel.dates):
            w.writerow([d.isoformat()] + [repr(float(v)) for v in panel.returns[:, t]])

    if isinstance(dest, io.TextIOBase):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)


def read_panel_csv(src):
    fh, close = _open_text(src)
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not header or header[0].strip() != "date":
            raise ValidationError("panel CSV must start with a 'date' column")
        assets = tuple(h.strip() for h in header[1:])
        if not assets:
            raise ValidationError("panel CSV has no asset columns")
        dates, rows = [], []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValidationError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            try:
                dates.append(dt.date.fromisoformat(row[0].strip()))
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise ValidationError(f"line {line}: {exc}") from None
    finally:
        if close:
            fh.close()
    if len(dates) < 2:
        raise ValidationError(f"panel CSV needs at least 2 dated rows, got {len(dates)}")
    return ReturnPanel(assets, tuple(dates), np.array(rows).T)


def _trim_first_year(series):
    if not len(series):
        return series
    cutoff = series.dates[0] + dt.timedelta(days=TRIM_DAYS)
    keep = {d for d in series.dates if d >= cutoff}
    return series.restrict(keep)


def select_universe(series_map, config, ingest_log=None):
    """Apply include/exclude lists and the first-year trim."""
    ingest_log = ingest_log if ingest_log is not None else IngestLog()
    out = {}
    for symbol in sorted(series_map):
        if symbol in config.exclude:
            reason = config.exclude[symbol] or "excluded by configuration"
            ingest_log.excluded[symbol] = reason
            log.info("excluding %s: %s", symbol, reason)
            continue
        if config.include is not None and symbol not in config.include:
            ingest_log.excluded[symbol] = "not in include list"
            continue
        s = series_map[symbol]
        if config.trim_first_year:
            s = _trim_first_year(s)
        out[symbol] = s
    if config.include is not None:
        missing = sorted(set(config.include) - set(series_map))
        if missing:
            ingest_log.warn(f"included symbols with no data: {missing}")
    return out


def _coverage(series_map):
    parts = []
    for s in series_map.values():
        if len(s):
            parts.append(f"{s.asset}: {len(s)} prices {s.dates[0]}..{s.dates[-1]}")
        else:
            parts.append(f"{s.asset}: no prices")
    return "; ".join(parts)


def complete_case_panel(series_map):
    """Return panel on the dates where every series has a price."""
    if not series_map:
        raise ValidationError("no symbols to build a panel from")
    common = None
    for s in series_map.values():
        common = set(s.dates) if common is None else common & set(s.dates)
    if len(common) < 3:
        raise ValidationError(
            f"only {len(common)} dates common to all symbols (need 3 for 2 returns); "
            f"coverage: {_coverage(series_map)}"
        )
    assets = sorted(series_map)
    rows = []
    dates = None
    for a in assets:
        rets = to_returns(series_map[a].restrict(common))
        dates = tuple(d for d, _ in rets)
        rows.append([r for _, r in rets])
    return ReturnPanel(tuple(assets), dates, np.array(rows))


def build_panel(series_map, config=None, date_range=None, ingest_log=None):
    """Filter the universe and assemble a complete-case return panel.

    ``date_range`` is an inclusive ``(first, last)`` pair of dates applied to
    prices after the first-year trim; either end may be None.
    """
    config = config if config is not None else UniverseConfig()
    ingest_log = ingest_log if ingest_log is not None else IngestLog()
    selected = select_universe(series_map, config, ingest_log)
    if date_range is not None:
        first, last = date_range
        selected = {
            k: s.restrict({d for d in s.dates
                           if (first is None or d >= first) and (last is None or d <= last)})
            for k, s in selected.items()
        }
    kept = {}
    for symbol, s in selected.items():
        if len(s) < max(2, config.min_history_days):
            ingest_log.excluded[symbol] = (
                f"only {len(s)} prices, need {max(2, config.min_history_days)}"
            )
            continue
        kept[symbol] = s
    if not kept:
        raise ValidationError(
            f"no symbols survive filtering; coverage: {_coverage(selected) or 'none'}"
        )
    return complete_case_panel(kept)
