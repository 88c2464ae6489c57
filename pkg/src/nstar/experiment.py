"""Random equal-weighted portfolio sampling.

Each iteration draws a portfolio size uniformly from the configured range,
then a uniformly random subset of that size, and measures

    N* = N * V_I / V_P

where V_P is the sample variance of the equal-weighted portfolio return and
V_I = mean(member variances) / N is what V_P would be under independence.
Subsets that were already drawn are discarded, so the number of distinct
trials is itself random.
"""

from dataclasses import dataclass
import csv
import io
import math

import numpy as np

from .errors import ValidationError
from .returns import row_variances

# iterations whose random draws are materialised at once
_CHUNK = 16384
# portfolio return rows evaluated per matrix product
_EVAL_ROWS = 2048


@dataclass(frozen=True)
class TrialRecord:
    subset: tuple  # sorted asset identifiers
    size: int
    v_portfolio: float
    v_independent: float
    n_star: float


@dataclass(frozen=True)
class SizeSummary:
    size: int
    mean: float
    std_dev: float
    count: int
    std_err: float
    single: bool = False  # count == 1: std_dev and std_err reported as 0

    @classmethod
    def from_moments(cls, size, mean, std_dev, count):
        """Build a summary from printed moments, deriving the standard error."""
        if count < 1:
            raise ValidationError(f"count must be at least 1, got {count}")
        if std_dev < 0:
            raise ValidationError(f"std_dev must be non-negative, got {std_dev}")
        return cls(
            size=int(size),
            mean=float(mean),
            std_dev=float(std_dev),
            count=int(count),
            std_err=float(std_dev) / math.sqrt(count),
            single=count == 1,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    n_iter: int = 1000
    seed: int = 0
    size_range: tuple = None  # inclusive (lo, hi); None means (1, N_max)

    def __post_init__(self):
        if int(self.n_iter) < 1:
            raise ValidationError(f"n_iter must be at least 1, got {self.n_iter}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.size_range is not None:
            lo, hi = (int(v) for v in self.size_range)
            if lo < 1 or hi < lo:
                raise ValidationError(f"invalid size range {self.size_range}")
            object.__setattr__(self, "size_range", (lo, hi))

    def resolved_sizes(self, n_max):
        if self.size_range is None:
            return 1, n_max
        lo, hi = self.size_range
        if hi > n_max:
            raise ValidationError(f"size range {self.size_range} exceeds universe of {n_max} assets")
        return lo, hi


def effective_dof(size, v_independent, v_portfolio):
    """N * V_I / V_P."""
    if size < 1:
        raise ValidationError(f"portfolio size must be positive, got {size}")
    if not (v_independent > 0 and v_portfolio > 0):
        raise ValidationError(
            f"variances must be positive, got V_I={v_independent}, V_P={v_portfolio}"
        )
    return size * v_independent / v_portfolio


def portfolio_variances(panel, subset):
    """(V_P, V_I) of the equal-weighted portfolio of ``subset``."""
    members = list(dict.fromkeys(subset))
    if not members:
        raise ValidationError("subset must be nonempty")
    rows = [panel.index_of(a) for a in members]
    n = len(rows)
    r = panel.returns[rows]
    variances = np.var(r, axis=1, ddof=1)
    if n == 1:
        v = float(variances[0])
        return v, v
    v_p = float(np.var(r.mean(axis=0), ddof=1))
    v_i = float(variances.sum()) / n**2
    return v_p, v_i


def _draw_chunk(rng, n_draw, n_max, lo, hi):
    # one row of uniforms per iteration (size draw, then one key per asset),
    # so iteration i consumes the same numbers however the run is chunked
    u = rng.random((n_draw, n_max + 1))
    sizes = lo + np.minimum((u[:, 0] * (hi - lo + 1)).astype(np.int64), hi - lo)
    keys = u[:, 1:]
    # a uniformly random k-subset: the k smallest of n_max i.i.d. uniform keys
    ranks = np.argsort(np.argsort(keys, axis=1, kind="stable"), axis=1, kind="stable")
    return ranks < sizes[:, None]


def _evaluate(panel, masks, variances):
    sizes = masks.sum(axis=1)
    weights = masks / sizes[:, None]
    v_i = (masks @ variances) / sizes**2
    v_p = np.empty(len(masks))
    for start in range(0, len(masks), _EVAL_ROWS):
        block = weights[start:start + _EVAL_ROWS] @ panel.returns
        v_p[start:start + _EVAL_ROWS] = np.var(block, axis=1, ddof=1)
    # single-asset portfolios: V_P and V_I are the same number by definition
    single = sizes == 1
    v_p[single] = v_i[single]
    return sizes, v_p, v_i


def run_experiment(panel, config):
    """Sample random equal-weighted portfolios and measure their N*.

    Results depend only on ``(panel, config)``. All random numbers for a
    block of iterations are drawn before any variance is computed, so the
    evaluation order cannot change which subsets are picked.

    Returns the distinct trials in order of first appearance.
    """
    n_max = panel.n_assets
    lo, hi = config.resolved_sizes(n_max)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    variances = row_variances(panel)
    bit_weights = None
    seen = set()
    trials = []
    remaining = int(config.n_iter)
    while remaining > 0:
        n_draw = min(_CHUNK, remaining)
        remaining -= n_draw
        masks = _draw_chunk(rng, n_draw, n_max, lo, hi)
        if n_max <= 62:
            if bit_weights is None:
                bit_weights = 1 << np.arange(n_max, dtype=np.int64)
            keys = (masks.astype(np.int64) @ bit_weights).tolist()
        else:
            keys = [row.tobytes() for row in np.packbits(masks, axis=1)]
        fresh = []
        for idx, key in enumerate(keys):
            if key not in seen:
                seen.add(key)
                fresh.append(idx)
        if not fresh:
            continue
        kept = masks[fresh].astype(float)
        sizes, v_p, v_i = _evaluate(panel, kept, variances)
        for row, k, vp, vi in zip(masks[fresh], sizes.tolist(), v_p.tolist(), v_i.tolist()):
            subset = tuple(sorted(panel.assets[i] for i in np.flatnonzero(row)))
            if not (vp > 0 and vi > 0):
                raise ValidationError(f"portfolio {subset} has zero variance; N* undefined")
            n_star = 1.0 if k == 1 else k * vi / vp
            trials.append(TrialRecord(subset, int(k), vp, vi, n_star))
    return trials


def full_universe_trial(panel):
    """The single portfolio holding every asset: the experiment's final datum."""
    v_p, v_i = portfolio_variances(panel, panel.assets)
    n = panel.n_assets
    return TrialRecord(
        tuple(sorted(panel.assets)), n, v_p, v_i, effective_dof(n, v_i, v_p)
    )


def summarize_by_size(trials):
    """Mean, standard deviation (divisor count - 1) and standard error of N* per size."""
    if not trials:
        raise ValidationError("no trials to summarize")
    by_size = {}
    for t in trials:
        by_size.setdefault(t.size, []).append(t.n_star)
    out = []
    for size in sorted(by_size):
        values = np.array(by_size[size])
        count = len(values)
        if count == 1:
            out.append(SizeSummary(size, float(values[0]), 0.0, 1, 0.0, single=True))
            continue
        sd = float(np.std(values, ddof=1))
        out.append(SizeSummary(size, float(values.mean()), sd, count, sd / math.sqrt(count)))
    return out


TRIAL_COLUMNS = ("subset", "size", "v_independent", "v_portfolio", "n_star")


def write_trials_csv(trials, dest):
    """Write trials as CSV. ``dest`` is a path or a text stream."""
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for t in trials:
            w.writerow([";".join(t.subset), t.size, repr(t.v_independent),
                        repr(t.v_portfolio), repr(t.n_star)])

    if isinstance(dest, io.TextIOBase):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)


def read_trials_csv(src):
    def _read(fh):
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRIAL_COLUMNS:
            raise ValidationError(f"unexpected trial CSV header {reader.fieldnames}")
        return [
            TrialRecord(
                tuple(row["subset"].split(";")),
                int(row["size"]),
                float(row["v_portfolio"]),
                float(row["v_independent"]),
                float(row["n_star"]),
            )
            for row in reader
        ]

    if isinstance(src, io.TextIOBase):
        return _read(src)
    with open(src, newline="") as fh:
        return _read(fh)


SUMMARY_COLUMNS = ("size", "mean", "std_dev", "count", "std_err")


def write_summary_csv(summaries, dest):
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([s.size, repr(s.mean), repr(s.std_dev), s.count, repr(s.std_err)])

    if isinstance(dest, io.TextIOBase):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)


def read_summary_csv(src):
    """Read per-size summaries.

    ``std_err`` is optional; when absent it is derived as std_dev / sqrt(count).
    """
    def _read(fh):
        reader = csv.DictReader(fh)
        names = set(reader.fieldnames or ())
        missing = {"size", "mean", "std_dev", "count"} - names
        if missing:
            raise ValidationError(f"summary CSV missing columns {sorted(missing)}")
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                s = SizeSummary.from_moments(
                    int(row["size"]), float(row["mean"]), float(row["std_dev"]), int(row["count"])
                )
                if row.get("std_err") not in (None, ""):
                    s = SizeSummary(s.size, s.mean, s.std_dev, s.count,
                                    float(row["std_err"]), s.single)
            except ValueError as exc:
                raise ValidationError(f"line {line}: {exc}") from None
            out.append(s)
        return sorted(out, key=lambda s: s.size)

    if isinstance(src, io.TextIOBase):
        return _read(src)
    with open(src, newline="") as fh:
        return _read(fh)
