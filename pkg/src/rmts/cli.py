"""
Command-line front end.

    rmts simulate|moments|fit|verify|rmexp --config cfg.json
         [--seed N] [--out PATH] [--format json|csv]

Series are written as CSV and reports as JSON (or flattened ``key,value``
CSV rows).  Every report echoes the seed and the resolved config, so any
run can be repeated from its report alone.  Reports carry no timings or
timestamps, so identical inputs give byte-identical output.

Exit codes: 0 success, 1 config or I/O error, 2 numerical failure.
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .config import MODES, read_config
from .errors import (ConfigError, InitializationError, InsufficientDataError,
                     NumericalError, SeriesParseError, SingularMatrixError,
                     UnsupportedEnsembleError)
from .io import flatten_report, format_series_csv, read_series, series_header, to_jsonable
from .likelihood import Params, TyingScheme, fit, nll
from .model import simulate
from .moments import convergence_report, mc_moments
from .rmde import RmexpConfig, rmexp_moment_check, rmexp_samples

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _simulated(exp):
    series, _ = simulate(exp.model, exp.initial, exp.horizon, exp.seed)
    return series


def _header(exp):
    return {"mode": exp.mode, "seed": exp.seed}


def run_simulate(exp):
    series = _simulated(exp)
    report = _header(exp)
    report["columns"] = series_header(series.dim, series.is_complex)
    report["values"] = series.values
    return report, series


def _moment_block(rep):
    return {
        "expectation": rep.expectation_fp,
        "variance": rep.variance_fp,
        "covariance": rep.covariance_fp,
        "covariance_mean": rep.covariance_mean,
        "rho_mean": rep.rho_mean,
        "rho_var": rep.rho_var,
        "converges_mean": rep.converges_mean,
        "converges_var": rep.converges_var,
        "constraint": rep.constraint,
    }


def _order1(exp, what):
    if exp.model.order != 1:
        raise ConfigError(f"{what} needs an order-1 model (one entry in model/lags)")
    return exp.model


def run_moments(exp):
    report = _header(exp)
    report["theory"] = _moment_block(convergence_report(_order1(exp, "moments")))
    return report, None


def _side_by_side(theory, sim):
    if theory is None:
        return {"theory": None, "simulation": sim, "abs_diff": None}
    return {"theory": theory, "simulation": sim, "abs_diff": np.abs(np.asarray(theory) - sim)}


def run_verify(exp):
    model = _order1(exp, "verify")
    rep = convergence_report(model)
    series = _simulated(exp)
    mc = mc_moments(series, exp.burn_in)
    report = _header(exp)
    report["horizon"] = exp.horizon
    report["burn_in"] = exp.burn_in
    report["samples"] = mc.samples
    report["converges_mean"] = rep.converges_mean
    report["converges_var"] = rep.converges_var
    report["mean"] = _side_by_side(rep.expectation_fp, mc.mean)
    report["variance"] = _side_by_side(rep.variance_fp, mc.variance)
    report["covariance_mean"] = _side_by_side(rep.covariance_mean, mc.mean_offdiag_cov)
    return report, None


def _truth_params(model):
    dist = model.dist
    return Params(R=np.asarray(dist.means, dtype=np.float64),
                  Sigma=np.asarray(dist.effective_stds, dtype=np.float64),
                  b=np.asarray(model.noise.means, dtype=np.float64),
                  sigma_b=np.asarray(model.noise.stds, dtype=np.float64))


def _param_block(p):
    return {"R": p.R, "Sigma": p.Sigma, "b": p.b, "sigma_b": p.sigma_b}


def run_fit(exp):
    model = _order1(exp, "fit")
    if model.is_complex:
        raise ConfigError("fit supports real models only")
    settings = exp.fit
    tying = TyingScheme.named(settings["tying"], model.dim)
    report = _header(exp)
    truth = None
    if exp.input:
        series = read_series(exp.input)
        if series.dim != model.dim:
            raise ConfigError(f"input series has {series.dim} columns, model/dim is {model.dim}")
        report["input"] = exp.input
    else:
        series = _simulated(exp)
        truth = _truth_params(model)
    result = fit(series, tying, init=settings["init"], optimizer=settings["optimizer"],
                 options=settings["options"])
    report["optimizer"] = result.optimizer_name
    report["tying"] = tying.variant
    report["transitions"] = len(series) - 1
    report["iterations"] = result.iterations
    report["evaluations"] = result.evaluations
    report["converged"] = result.converged
    report["nll"] = result.nll
    report["free"] = dict(zip(result.names, result.free))
    report["estimate"] = _param_block(result.params)
    if truth is not None:
        report["truth"] = _param_block(truth)
        report["abs_error"] = {
            "R": np.abs(result.R - truth.R),
            "Sigma": np.abs(result.Sigma - np.abs(truth.Sigma)),
            "b": np.abs(result.b - truth.b),
            "sigma_b": np.abs(result.sigma_b - np.abs(truth.sigma_b)),
        }
        try:
            report["nll_truth"] = nll(truth, series)
        except NumericalError:
            report["nll_truth"] = None
    return report, None


def run_rmexp(exp):
    settings = exp.rmexp
    dist = exp.model.lag_dists[0]
    cfg = RmexpConfig(dist, horizon=settings["horizon"], steps=settings["steps"],
                      paths=settings["paths"], seed=exp.seed, scaling=settings["scaling"])
    report = _header(exp)
    report.update(horizon=cfg.horizon, steps=cfg.steps, paths=cfg.paths, scaling=cfg.scaling)
    # independent factors: E[F_{n-1} ... F_0] is the n-th power of E[F]
    mean_theory = np.linalg.matrix_power(np.eye(dist.dim) + cfg.dt * dist.means, cfg.steps)
    if dist.dim == 1 and not dist.is_complex:
        check = rmexp_moment_check(cfg)
        report["log_y"] = {
            "mean": {"theory": check.target_mean, "simulation": check.mean_log,
                     "abs_diff": abs(check.mean_log - check.target_mean)},
            "std": {"theory": check.target_std, "simulation": check.std_log,
                    "abs_diff": abs(check.std_log - check.target_std)},
            "ks_distance": check.ks_distance,
            "nonpositive_paths": check.nonpositive,
        }
    else:
        samples = rmexp_samples(cfg)
        report["mean"] = _side_by_side(mean_theory, samples.mean(axis=0))
    return report, None


RUNNERS = {"simulate": run_simulate, "moments": run_moments, "fit": run_fit,
           "verify": run_verify, "rmexp": run_rmexp}


def render(report, fmt):
    data = to_jsonable(report)
    if fmt == "json":
        return json.dumps(data, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for key, value in flatten_report(data):
        w.writerow([key, "" if value is None else value])
    return buf.getvalue()


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors here, not argparse's default exit 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="rmts", description="Random-coefficient time series tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None, help="output path (default: config output or stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=None,
                   help="default: csv for simulate, json otherwise")
    return p


def execute(args):
    """Run one parsed command; returns the text written."""
    exp = read_config(args.config, seed=args.seed)
    if exp.mode != args.mode:
        # the subcommand wins; record it so the resolved config matches the run
        exp.resolved["mode"] = args.mode
        exp.mode = args.mode
    fmt = args.format or ("csv" if args.mode == "simulate" else "json")
    report, series = RUNNERS[args.mode](exp)
    if series is not None and fmt == "csv":
        text = format_series_csv(series)
    else:
        report["config"] = exp.resolved
        text = render(report, fmt)
    out = args.out or exp.output
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help / --version exit 0, usage errors exit 1
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        execute(args)
    except (NumericalError, SingularMatrixError, InitializationError) as exc:
        print(f"rmts: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, SeriesParseError, InsufficientDataError,
            UnsupportedEnsembleError) as exc:
        print(f"rmts: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"rmts: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"rmts: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
