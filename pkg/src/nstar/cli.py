"""Command line entry point.

Subcommands write their outputs into ``--output`` (a directory, created if
needed). Exit status: 0 success, 1 validation or usage error, 2 I/O error.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from .config import RunConfig, load_config
from .errors import ConvergenceError, ValidationError
from .experiment import (
    ExperimentConfig, full_universe_trial, read_summary_csv, run_experiment,
    summarize_by_size, write_summary_csv, write_trials_csv,
)
from .inference import reports_to_json, write_table1_csv
from .ingest import (
    IngestLog, build_panel, parse_daily_bars, parse_quote_snapshots, read_panel_csv,
    write_panel_csv,
)
from .models import model_curve_rows, write_model_curves_csv
from .pipeline import compare_models
from .returns import pairwise_correlation_census
from .synthetic import FactorSpec, IsotropicSpec, block_loadings, gen_factor, gen_isotropic
from .yearly import write_table2_csv, yearly_report

log = logging.getLogger("nstar")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _int_pair(text):
    parts = text.replace(",", ":").split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return int(parts[0]), int(parts[1])


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    p.add_argument("--config", default=None, help="JSON configuration file")
    p.add_argument("--output", default=".", help="output directory (default: current)")


def _input(p, formats=("panel", "bars", "snapshots")):
    p.add_argument("--input", required=True, help="input CSV file")
    p.add_argument("--format", choices=formats, default=formats[0],
                   help=f"input format (default: {formats[0]})")


def build_parser():
    parser = _Parser(prog="nstar", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("corr", help="pairwise correlation census and histogram")
    _input(p)
    _common(p)
    p.add_argument("--bins", type=int, default=20)

    p = sub.add_parser("experiment", help="random portfolio sampling; trials CSV")
    _input(p)
    _common(p)
    p.add_argument("--iters", type=int, default=None)

    p = sub.add_parser("fit", help="fit the factor curve; model curve CSV")
    _input(p, ("panel", "bars", "snapshots", "summary"))
    _common(p)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None, help="universe size for summary input")
    p.add_argument("--anchor", type=float, default=None, help="full-universe N* for summary input")
    p.add_argument("--weighted", action="store_true", help="weight residuals by 1/std_err")

    p = sub.add_parser("test", help="chi-square and F tests; JSON report and table CSV")
    _input(p, ("panel", "bars", "snapshots", "summary"))
    _common(p)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None, help="universe size for summary input")
    p.add_argument("--anchor", type=float, default=None, help="full-universe N* for summary input")
    p.add_argument("--weighted", action="store_true", help="weight fit residuals by 1/std_err")

    p = sub.add_parser("by-year", help="full-universe N* per calendar year")
    _input(p, ("bars", "snapshots"))
    _common(p)
    p.add_argument("--years", type=_int_pair, default=None, help="LO:HI years to report")
    p.add_argument("--stability-years", type=_int_pair, default=None,
                   help="LO:HI years for the stability summary")

    p = sub.add_parser("simulate", help="synthetic return panel CSV")
    _common(p)
    p.add_argument("--model", choices=("isotropic", "factor"), default="isotropic")
    p.add_argument("--n-assets", type=int, default=14)
    p.add_argument("--t-obs", type=int, default=2000)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=3.0)
    p.add_argument("--k-factors", type=int, default=3)
    p.add_argument("--loading", type=float, default=3.0)
    p.add_argument("--residual-sd", type=float, default=0.3)
    p.add_argument("--start", default="2000-01-02", help="first date (YYYY-MM-DD)")
    return parser


def _out(args, name):
    os.makedirs(args.output, exist_ok=True)
    return os.path.join(args.output, name)


def _config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg


def _experiment_config(args, cfg):
    e = cfg.experiment
    return ExperimentConfig(
        n_iter=args.iters if getattr(args, "iters", None) is not None else e.n_iter,
        seed=args.seed if args.seed is not None else e.seed,
        size_range=e.size_range,
    )


def _load_series(args, ingest_log):
    if args.format == "bars":
        return parse_daily_bars(args.input, ingest_log)
    return parse_quote_snapshots(args.input, ingest_log)


def _load_panel(args, cfg):
    if args.format == "panel":
        return read_panel_csv(args.input)
    ingest_log = IngestLog()
    return build_panel(_load_series(args, ingest_log), cfg.universe, ingest_log=ingest_log)


def _write_json(path, doc):
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _finite(v):
    return v if math.isfinite(v) else None


def cmd_corr(args):
    panel = _load_panel(args, _config(args))
    census = pairwise_correlation_census(panel, bins=args.bins)
    with open(_out(args, "correlations.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("asset_i", "asset_j", "rho"))
        for a, b, r in census.pairs:
            w.writerow((a, b, repr(r)))
    with open(_out(args, "correlation_histogram.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("bin_lower", "bin_upper", "count"))
        for lo, hi, c in census.histogram:
            w.writerow((repr(lo), repr(hi), c))
    _write_json(_out(args, "correlation_summary.json"), {
        "n_assets": panel.n_assets, "n_obs": census.n_obs, "n_pairs": len(census.pairs),
        "mean_rho": census.mean_rho, "fisher_se": _finite(census.fisher_se),
    })
    print(f"{len(census.pairs)} pairs, mean rho {census.mean_rho:.4f}, "
          f"Fisher s.e. {census.fisher_se:.4f}")


def cmd_experiment(args):
    cfg = _config(args)
    panel = _load_panel(args, cfg)
    trials = run_experiment(panel, _experiment_config(args, cfg))
    write_trials_csv(trials, _out(args, "trials.csv"))
    with open(_out(args, "nstar_scatter.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("size", "n_star"))
        for t in trials:
            w.writerow((t.size, repr(t.n_star)))
    write_summary_csv(summarize_by_size(trials), _out(args, "summary.csv"))
    print(f"{len(trials)} distinct portfolios from {panel.n_assets} assets")


def _comparison(args, cfg):
    if args.format == "summary":
        summaries = read_summary_csv(args.input)
        by_size = {s.size: s for s in summaries}
        n_max = args.n_max if args.n_max is not None else max(by_size)
        anchor = args.anchor
        if anchor is None:
            if n_max not in by_size:
                raise ValidationError("summary input needs --anchor or a row for size n_max")
            anchor = by_size[n_max].mean
    else:
        panel = _load_panel(args, cfg)
        trials = run_experiment(panel, _experiment_config(args, cfg))
        summaries = summarize_by_size(trials)
        n_max = panel.n_assets
        anchor = full_universe_trial(panel).n_star
    return compare_models(
        summaries, n_max, anchor,
        test_sizes=cfg.test.size_range(),
        fit_sizes=cfg.fit.size_range(),
        weighted_fit=args.weighted or cfg.fit.weighted,
        max_iterations=cfg.fit.max_iterations,
        tolerance=cfg.fit.tolerance,
    )


def _fit_doc(cmp):
    fit = cmp.factor_fit
    return {
        "n_max": cmp.n_max,
        "anchor_n_star": cmp.anchor_n_star,
        "isotropic": {"rho": cmp.isotropic.rho,
                      "limit": _finite(1.0 / cmp.isotropic.rho) if cmp.isotropic.rho > 0 else None},
        "factor": {
            "a_over_d": fit.a_over_d, "a_over_d_se": fit.a_over_d_se,
            "c_over_d": fit.c_over_d, "c_over_d_se": fit.c_over_d_se,
            "a": fit.curve.a, "c": fit.curve.c, "d": fit.curve.d,
            "loss": fit.loss, "weighted": fit.weighted, "fit_sizes": list(fit.sizes),
        },
        "asymptote": {"imputed_k": cmp.imputed_k, "slope": cmp.anchor_n_star / cmp.n_max},
    }


def cmd_fit(args):
    cfg = _config(args)
    cmp = _comparison(args, cfg)
    rows = model_curve_rows(cmp.n_max, cmp.isotropic, cmp.factor_fit.curve, cmp.anchor_n_star)
    write_model_curves_csv(rows, _out(args, "model_curves.csv"))
    _write_json(_out(args, "fit.json"), _fit_doc(cmp))
    fit = cmp.factor_fit
    print(f"rho {cmp.isotropic.rho:.4f}; factor a/d {fit.a_over_d:.4g}±{fit.a_over_d_se:.2g}, "
          f"c/d {fit.c_over_d:.4g}±{fit.c_over_d_se:.2g}; K {cmp.imputed_k}")


def cmd_test(args):
    cfg = _config(args)
    cmp = _comparison(args, cfg)
    with open(_out(args, "test_report.json"), "w") as fh:
        fh.write(reports_to_json([cmp.iso_report, cmp.factor_report], cmp.equivalence,
                                 extra={"fit": _fit_doc(cmp)}))
    write_table1_csv(cmp.table1(), _out(args, "table1.csv"))
    write_summary_csv(cmp.summaries, _out(args, "summary.csv"))
    iso, fac, eq = cmp.iso_report, cmp.factor_report, cmp.equivalence
    print(f"isotropic chi2 {iso.total_chi_sq:.1f} / {iso.dof} dof, p {iso.p_value:.4g}")
    print(f"factor    chi2 {fac.total_chi_sq:.1f} / {fac.dof} dof, p {fac.p_value:.4g}")
    print(f"F({eq.dof_numerator},{eq.dof_denominator}) = {eq.f_statistic:.4g}, p {eq.p_value:.3g}")


def cmd_by_year(args):
    cfg = _config(args)
    ingest_log = IngestLog()
    series = _load_series(args, ingest_log)
    years = range(args.years[0], args.years[1] + 1) if args.years else None
    stab = (range(args.stability_years[0], args.stability_years[1] + 1)
            if args.stability_years else None)
    report = yearly_report(series, cfg.universe, years=years, stability_years=stab,
                           ingest_log=ingest_log)
    write_table2_csv(report.stats, _out(args, "table2.csv"))
    with open(_out(args, "nstar_by_year.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("year", "n_star", "rho", "n_max", "n_obs", "short"))
        for s in report.stats:
            w.writerow((s.year, repr(s.n_star), repr(s.rho), s.n_max, s.n_obs, int(s.short)))
    st = report.stability
    _write_json(_out(args, "stability.json"), {
        "years": list(st.years), "mean": st.mean, "std_dev": _finite(st.std_dev),
        "std_err": _finite(st.std_err), "undefined_spread": st.undefined_spread,
        "skipped": {str(k): v for k, v in report.skipped.items()},
        "excluded": ingest_log.excluded,
    })
    print(f"{len(report.stats)} years; N* mean {st.mean:.3f}, sd {st.std_dev:.3f}, "
          f"s.e. {st.std_err:.3f}")


def cmd_simulate(args):
    cfg = _config(args)
    seed = args.seed if args.seed is not None else cfg.experiment.seed
    if args.model == "isotropic":
        spec = IsotropicSpec(args.n_assets, args.t_obs, args.rho, args.sigma)
        panel = gen_isotropic(spec, seed, start=args.start)
    else:
        if args.k_factors < 1 or args.k_factors > args.n_assets:
            raise ValidationError(f"k_factors must be in [1, {args.n_assets}]")
        base, extra = divmod(args.n_assets, args.k_factors)
        blocks = [base + (1 if j < extra else 0) for j in range(args.k_factors)]
        spec = FactorSpec(block_loadings(blocks, args.loading),
                          np.full(args.n_assets, args.residual_sd), args.t_obs)
        panel = gen_factor(spec, seed, start=args.start)
    write_panel_csv(panel, _out(args, "panel.csv"))
    print(f"{panel.n_assets} assets x {panel.n_dates} dates")


COMMANDS = {
    "corr": cmd_corr,
    "experiment": cmd_experiment,
    "fit": cmd_fit,
    "test": cmd_test,
    "by-year": cmd_by_year,
    "simulate": cmd_simulate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "nstar: error: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except (ValidationError, ConvergenceError) as exc:
        print(f"nstar: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"nstar: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
