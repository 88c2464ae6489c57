"""Goodness of fit of an N*(N) curve to per-size sample means, and the
F-ratio comparison of two such fits."""

from dataclasses import dataclass, asdict
import csv
import io
import json
import math

from .errors import ValidationError
from .special import chi2_sf, f_sf

# sizes with fewer trials than this are flagged: the normal approximation
# for their mean is doubtful
MIN_NORMAL_COUNT = 30


@dataclass(frozen=True)
class TestRow:
    size: int
    sample_mean: float
    model_value: float
    error: float
    z_score: float
    chi_sq_contribution: float
    count: int
    low_count: bool


@dataclass(frozen=True)
class TestReport:
    rows: tuple
    total_chi_sq: float
    dof: int
    n_params: int
    p_value: float
    label: str = ""

    @property
    def reduced_chi_sq(self):
        return self.total_chi_sq / self.dof

    @property
    def sizes(self):
        return tuple(r.size for r in self.rows)

    def row(self, size):
        for r in self.rows:
            if r.size == size:
                return r
        raise KeyError(size)

    def to_dict(self):
        return {
            "label": self.label,
            "total_chi_sq": self.total_chi_sq,
            "dof": self.dof,
            "n_params": self.n_params,
            "reduced_chi_sq": self.reduced_chi_sq,
            "p_value": self.p_value,
            "rows": [asdict(r) for r in self.rows],
        }

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class EquivalenceResult:
    """F ratio of two reduced chi-square values, larger on top.

    ``p_value`` is the two-sided variance-ratio probability
    ``min(1, 2 * P(F > f))``; ``upper_tail_p`` is ``P(F > f)`` alone.
    """

    f_statistic: float
    dof_numerator: int
    dof_denominator: int
    p_value: float
    upper_tail_p: float
    numerator_label: str = ""
    denominator_label: str = ""
    degenerate: bool = False

    def to_dict(self):
        return asdict(self)


def default_test_sizes(n_max):
    """Portfolio sizes 2 .. n_max - 1.

    Size 1 always has N* = 1, and size n_max is the datum the isotropic
    curve is pinned to, so neither carries information for a test.
    """
    return range(2, n_max)


def goodness_of_fit(summaries, model_values, included_sizes=None, n_params=0,
                    n_max=None, label=""):
    """Z scores and total chi-square of ``model_values`` against the size means.

    ``model_values`` is a callable ``size -> value`` or a mapping. By default
    sizes 1 and n_max are left out (n_max defaults to the largest size
    present in ``summaries``).
    """
    by_size = {s.size: s for s in summaries}
    if not by_size:
        raise ValidationError("no summaries given")
    if included_sizes is None:
        top = n_max if n_max is not None else max(by_size)
        included_sizes = default_test_sizes(top)
    sizes = [int(n) for n in included_sizes if int(n) in by_size]
    if n_params < 0:
        raise ValidationError(f"n_params must be non-negative, got {n_params}")
    if len(sizes) <= n_params:
        raise ValidationError(
            f"{len(sizes)} sizes cannot test a model with {n_params} free parameters"
        )
    value_of = model_values if callable(model_values) else model_values.__getitem__

    rows = []
    total = 0.0
    for n in sizes:
        s = by_size[n]
        if not s.std_err > 0:
            raise ValidationError(f"size {n}: standard error must be positive, got {s.std_err}")
        model = float(value_of(n))
        err = s.mean - model
        z = err / s.std_err
        contrib = z * z
        total += contrib
        rows.append(TestRow(n, s.mean, model, err, z, contrib, s.count,
                            s.count < MIN_NORMAL_COUNT))
    dof = len(sizes) - n_params
    return TestReport(tuple(rows), total, dof, n_params, chi2_sf(total, dof), label)


def equivalence_test(report_a, report_b):
    """F test that two fits describe the data equally well."""
    for r in (report_a, report_b):
        if r.dof < 1:
            raise ValidationError(f"report {r.label!r} has dof {r.dof}; need at least 1")
    ra, rb = report_a.reduced_chi_sq, report_b.reduced_chi_sq
    if ra >= rb:
        top, bottom = report_a, report_b
    else:
        top, bottom = report_b, report_a
    num, den = top.reduced_chi_sq, bottom.reduced_chi_sq
    if num == 0.0:
        # both fits are exact
        return EquivalenceResult(1.0, top.dof, bottom.dof, 1.0, 1.0,
                                 top.label, bottom.label, degenerate=True)
    if den == 0.0:
        return EquivalenceResult(math.inf, top.dof, bottom.dof, 0.0, 0.0,
                                 top.label, bottom.label, degenerate=True)
    f = num / den
    upper = f_sf(f, top.dof, bottom.dof)
    return EquivalenceResult(f, top.dof, bottom.dof, min(1.0, 2.0 * upper), upper,
                             top.label, bottom.label)


def reports_to_json(reports, equivalence=None, extra=None):
    """Serialise test reports (and optionally their F comparison) as JSON text."""
    doc = {"reports": [r.to_dict() for r in reports]}
    if equivalence is not None:
        doc["equivalence"] = equivalence.to_dict()
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


TABLE1_COLUMNS = (
    "assets", "sample_mean", "sample_sd", "count", "std_err",
    "iso_model", "iso_error", "iso_z", "iso_chisq",
    "factor_model", "factor_error", "factor_z", "factor_chisq",
)


def table1_rows(summaries, iso_value, factor_value, iso_report, factor_report):
    """Per-size comparison rows for both models.

    Z and chi-square cells are ``None`` for sizes outside the tests.
    """
    iso_rows = {r.size: r for r in iso_report.rows}
    fac_rows = {r.size: r for r in factor_report.rows}
    out = []
    for s in sorted(summaries, key=lambda s: s.size):
        iso = float(iso_value(s.size))
        fac = float(factor_value(s.size))
        ir = iso_rows.get(s.size)
        fr = fac_rows.get(s.size)
        out.append({
            "assets": s.size,
            "sample_mean": s.mean,
            "sample_sd": s.std_dev,
            "count": s.count,
            "std_err": s.std_err,
            "iso_model": iso,
            "iso_error": s.mean - iso,
            "iso_z": ir.z_score if ir else None,
            "iso_chisq": ir.chi_sq_contribution if ir else None,
            "factor_model": fac,
            "factor_error": s.mean - fac,
            "factor_z": fr.z_score if fr else None,
            "factor_chisq": fr.chi_sq_contribution if fr else None,
        })
    return out


def write_table1_csv(rows, dest):
    def _fmt(v):
        if v is None:
            return ""
        return repr(float(v)) if isinstance(v, float) else str(v)

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE1_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in TABLE1_COLUMNS])

    if isinstance(dest, io.TextIOBase):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)
