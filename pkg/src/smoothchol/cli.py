"""Command line pipeline: simulate, fit, tune, forecast, evaluate.

Every command writes a key=value manifest recording its parameters and
library versions next to its outputs, so any run can be reproduced
byte for byte.  Exit codes: 0 success, 1 usage or input-file problems,
2 numerical failure during estimation.

Data files are CSV, rows = observations, columns = variables; pass
--transpose for the opposite layout and --header to skip a header
line.  Fitting treats rows as zero-mean draws (S = X'X/n); pass
--standardize to center and scale columns first.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .bcd import fit
from .errors import SmoothCholError
from .fileio import (
    read_manifest,
    read_matrix,
    read_vector,
    versions,
    write_factor,
    write_manifest,
    write_matrix,
    write_metrics,
    write_scores,
    write_vector,
)
from .metrics import conditional_forecast, forecast_error, kl_loss, matrix_error, total_variation
from .model import (
    PENALTY_FAMILIES,
    FitConfig,
    ModifiedChol,
    PenaltySpec,
    SampleCov,
    covariance,
    from_modified,
    precision,
    to_modified,
)
from .simulate import CASES, CaseSpec, make_truth, sample_gaussian, standardize
from .tuning import TuneGrid, tune

EVAL_METRICS = (
    "frob_T", "inf_T", "frob_L", "inf_L", "frob_omega", "inf_omega",
    "frob_sigma", "inf_sigma", "kl", "tv_T1",
)


class CliError(Exception):
    """Usage-level problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _band(text):
    if text == "all":
        return "all"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must be an integer or 'all', got {text!r}")


def _grid_spec(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be LO:HI:N, got {text!r}")
    try:
        lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be LO:HI:N, got {text!r}")
    if num < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad grid range {text!r}")
    return lo, hi, num


def _add_data_flags(sub):
    sub.add_argument("--transpose", action="store_true",
                     help="input CSV is variables x observations")
    sub.add_argument("--header", action="store_true",
                     help="skip the first line of the input CSV")
    sub.add_argument("--standardize", action="store_true",
                     help="center and scale columns before fitting")


def _add_fit_flags(sub, required=True):
    sub.add_argument("--penalty", choices=PENALTY_FAMILIES, required=required)
    sub.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sub.add_argument("--lambda1", dest="lam1", type=float, default=0.0)
    sub.add_argument("--band", type=_band, default="all")
    sub.add_argument("--tol", type=float, default=1e-4)
    sub.add_argument("--max-iter", type=int, default=500)
    sub.add_argument("--path", choices=("auto", "dense", "lowrank"), default="auto")


def build_parser():
    parser = _Parser(prog="smoothchol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="generate a synthetic dataset and its truth")
    ps.add_argument("--case", choices=CASES, required=True)
    ps.add_argument("--p", type=int, required=True)
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--band", type=int, default=None)
    ps.add_argument("--standardize", action="store_true",
                    help="standardize the sampled data before writing")
    ps.add_argument("--out", required=True)

    pf = sub.add_parser("fit", help="fit a penalized Cholesky factor")
    pf.add_argument("--data")
    pf.add_argument("--out")
    pf.add_argument("--from-manifest", dest="from_manifest",
                    help="rerun a previous fit from its manifest")
    pf.add_argument("--format", choices=("csv", "trp"), default="csv",
                    help="factor serialization")
    pf.add_argument("--subdiag-sign", choices=("t", "phi"), default="t",
                    help="report the first subdiagonal as T entries or as phi = -T")
    _add_fit_flags(pf, required=False)
    _add_data_flags(pf)

    pt = sub.add_parser("tune", help="select penalty weights by BIC or cross validation")
    pt.add_argument("--data", required=True)
    pt.add_argument("--criterion", choices=("bic", "cv"), default="bic")
    pt.add_argument("--folds", type=int, default=5)
    pt.add_argument("--grid", type=_grid_spec, default=(0.1, 1.0, 100),
                    help="lambda grid as LO:HI:N (default 0.1:1:100)")
    pt.add_argument("--grid1", type=_grid_spec, default=None,
                    help="lambda1 grid as LO:HI:N (sparse-fused only)")
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--out", required=True)
    _add_fit_flags(pt)
    _add_data_flags(pt)

    pc = sub.add_parser("forecast", help="conditional forecasts from a fitted model")
    pc.add_argument("--train", required=True)
    pc.add_argument("--test", required=True)
    pc.add_argument("--split", type=int, required=True)
    pc.add_argument("--out", required=True)
    _add_fit_flags(pc)
    _add_data_flags(pc)

    pe = sub.add_parser("evaluate", help="compare a fitted factor against a truth")
    pe.add_argument("--estimate", required=True, help="directory written by fit or tune")
    pe.add_argument("--truth", required=True, help="directory written by simulate")
    pe.add_argument("--metrics", required=True,
                    help="comma list from: " + ",".join(EVAL_METRICS))
    pe.add_argument("--out", required=True, help="output metrics CSV file")

    return parser


def _penalty_from(args):
    try:
        return PenaltySpec(family=args.penalty, lam=args.lam, lam1=args.lam1)
    except SmoothCholError as exc:
        raise CliError(str(exc))


def _config_from(args):
    try:
        return FitConfig(epsilon=args.tol, max_iter=args.max_iter,
                         band=args.band, path=args.path)
    except SmoothCholError as exc:
        raise CliError(str(exc))


def _load_data(path, args):
    X = read_matrix(path, header=args.header, transpose=args.transpose)
    if args.standardize:
        X = standardize(X)
    return X


def _fit_outputs(outdir, result, fmt_kind="csv", sign="t"):
    L = result.L
    write_factor(os.path.join(outdir, "L.trp" if fmt_kind == "trp" else "L.csv"), L)
    m = to_modified(L)
    write_matrix(os.path.join(outdir, "T.csv"), m.T)
    write_vector(os.path.join(outdir, "lam.csv"), m.lam)
    sub1 = np.diag(m.T, -1)
    if sign == "phi":
        sub1 = -sub1
    write_vector(os.path.join(outdir, "subdiag1.csv"), sub1)


def _result_entries(result):
    return {
        "iterations": result.iterations,
        "converged": result.converged,
        "objective": result.objective_trace[-1],
        "final_gap": result.final_gap,
        "path_used": result.path,
    }


def cmd_simulate(args):
    spec = CaseSpec(case_id=args.case, p=args.p, seed=args.seed,
                    band=args.band)
    truth = make_truth(spec)
    data = sample_gaussian(truth, args.n, args.seed)
    if args.standardize:
        data = standardize(data)
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "data.csv"), data)
    write_matrix(os.path.join(args.out, "T.csv"), truth.T)
    write_vector(os.path.join(args.out, "Lambda.csv"), truth.lam)
    entries = {
        "command": "simulate",
        "case": spec.case_id,
        "p": spec.p,
        "n": args.n,
        "seed": spec.seed,
        "band": spec.band,
        "standardize": args.standardize,
        "out": args.out,
    }
    entries.update(versions())
    write_manifest(os.path.join(args.out, "manifest.txt"), entries)


_MANIFEST_FIT_KEYS = (
    ("data", str), ("penalty", str), ("lambda", float), ("lambda1", float),
    ("band", _band), ("tol", float), ("max_iter", int), ("path", str),
    ("transpose", None), ("header", None), ("standardize", None),
    ("format", str), ("subdiag_sign", str), ("out", str),
)


def _args_from_manifest(path, out_override):
    entries = read_manifest(path)
    if entries.get("command") != "fit":
        raise CliError(f"{path}: not a fit manifest")
    ns = argparse.Namespace()
    for key, conv in _MANIFEST_FIT_KEYS:
        if key not in entries:
            raise CliError(f"{path}: missing key {key!r}")
        raw = entries[key]
        if conv is None:  # boolean flag
            if raw not in ("true", "false"):
                raise CliError(f"{path}: key {key!r} must be true or false")
            value = raw == "true"
        else:
            try:
                value = conv(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise CliError(f"{path}: bad value for {key!r}: {exc}")
        attr = {"lambda": "lam", "lambda1": "lam1"}.get(key, key)
        setattr(ns, attr, value)
    if out_override:
        ns.out = out_override
    return ns


def cmd_fit(args):
    if args.from_manifest:
        args = _args_from_manifest(args.from_manifest, args.out)
    if not args.data or not args.out or not args.penalty:
        raise CliError("fit requires --data, --penalty and --out (or --from-manifest)")
    penalty = _penalty_from(args)
    config = _config_from(args)
    X = _load_data(args.data, args)
    cov = SampleCov.from_data(X, center=False)
    result = fit(cov, penalty, config)
    os.makedirs(args.out, exist_ok=True)
    _fit_outputs(args.out, result, args.format, args.subdiag_sign)
    entries = {
        "command": "fit",
        "data": args.data,
        "penalty": args.penalty,
        "lambda": args.lam,
        "lambda1": args.lam1,
        "band": args.band,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "path": args.path,
        "transpose": args.transpose,
        "header": args.header,
        "standardize": args.standardize,
        "format": args.format,
        "subdiag_sign": args.subdiag_sign,
        "out": args.out,
    }
    entries.update(versions())
    entries.update(_result_entries(result))
    write_manifest(os.path.join(args.out, "manifest.txt"), entries)


def cmd_tune(args):
    config = _config_from(args)
    if args.penalty == "none":
        raise CliError("tune needs a penalized family; got none")
    X = _load_data(args.data, args)
    lo, hi, num = args.grid
    kwargs = {"lams": np.linspace(lo, hi, num)}
    if args.grid1 is not None:
        if args.penalty != "sparse-fused":
            raise CliError("--grid1 only applies to sparse-fused")
        lo1, hi1, num1 = args.grid1
        kwargs["lam1s"] = np.linspace(lo1, hi1, num1)
    grid = TuneGrid(**kwargs)
    result = tune(X, args.penalty, grid, args.criterion,
                  config, args.folds, args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_scores(os.path.join(args.out, "scores.csv"), result.points, args.criterion)
    _fit_outputs(args.out, result.result)
    entries = {
        "command": "tune",
        "data": args.data,
        "penalty": args.penalty,
        "criterion": args.criterion,
        "folds": args.folds,
        "grid": f"{lo}:{hi}:{num}",
        "grid1": "" if args.grid1 is None else "%s:%s:%s" % args.grid1,
        "seed": args.seed,
        "band": args.band,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "path": args.path,
        "transpose": args.transpose,
        "header": args.header,
        "standardize": args.standardize,
        "out": args.out,
        "best_lambda": result.best.lam,
        "best_lambda1": result.best.lam1,
        "best_score": result.best_score,
        "n_failed": sum(1 for pt in result.points if not np.isfinite(pt.score)),
    }
    entries.update(versions())
    entries.update(_result_entries(result.result))
    write_manifest(os.path.join(args.out, "manifest.txt"), entries)


def cmd_forecast(args):
    penalty = _penalty_from(args)
    config = _config_from(args)
    train = read_matrix(args.train, header=args.header, transpose=args.transpose)
    test = read_matrix(args.test, header=args.header, transpose=args.transpose)
    if train.shape[1] != test.shape[1]:
        raise ValueError(
            f"train has {train.shape[1]} columns but test has {test.shape[1]}")
    if args.standardize:
        mean = train.mean(axis=0)
        sd = np.sqrt(((train - mean) ** 2).mean(axis=0))
        if np.any(sd == 0):
            raise CliError(f"column {int(np.argmin(sd))} of train has zero variance")
        train = (train - mean) / sd
        test = (test - mean) / sd
    p = train.shape[1]
    if not 0 < args.split < p:
        raise CliError(f"split must be strictly between 0 and {p}")
    mu = train.mean(axis=0)
    cov = SampleCov.from_data(train, center=False)
    result = fit(cov, penalty, config)
    sigma = covariance(result.L)
    pred = conditional_forecast(mu, sigma, test[:, : args.split], args.split)
    fe, aggregate = forecast_error(pred, test[:, args.split:])
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "predictions.csv"), pred)
    with open(os.path.join(args.out, "fe.csv"), "w") as fh:
        fh.write("t,fe\n")
        for t, v in enumerate(fe):
            fh.write(f"{args.split + t},{repr(float(v))}\n")
    entries = {
        "command": "forecast",
        "train": args.train,
        "test": args.test,
        "split": args.split,
        "penalty": args.penalty,
        "lambda": args.lam,
        "lambda1": args.lam1,
        "band": args.band,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "path": args.path,
        "transpose": args.transpose,
        "header": args.header,
        "standardize": args.standardize,
        "out": args.out,
        "fe_aggregate": aggregate,
    }
    entries.update(versions())
    entries.update(_result_entries(result))
    write_manifest(os.path.join(args.out, "manifest.txt"), entries)


def _read_estimate(folder):
    from .fileio import read_factor

    for name in ("L.csv", "L.trp"):
        path = os.path.join(folder, name)
        if os.path.exists(path):
            return read_factor(path)
    raise CliError(f"{folder}: no L.csv or L.trp found")


def _read_truth(folder):
    t_path = os.path.join(folder, "T.csv")
    lam_path = os.path.join(folder, "Lambda.csv")
    if not (os.path.exists(t_path) and os.path.exists(lam_path)):
        raise CliError(f"{folder}: expected T.csv and Lambda.csv")
    return ModifiedChol(T=read_matrix(t_path), lam=read_vector(lam_path))


def cmd_evaluate(args):
    requested = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if not requested:
        raise CliError("no metrics requested")
    for name in requested:
        if name not in EVAL_METRICS:
            raise CliError(f"unknown metric {name!r}; choose from {','.join(EVAL_METRICS)}")
    L_est = _read_estimate(args.estimate)
    truth = _read_truth(args.truth)
    L_true = from_modified(truth)
    m_est = to_modified(L_est)

    values = {}
    for name in requested:
        kind = "frob_scaled" if name.startswith("frob") else "inf"
        if name in ("frob_T", "inf_T"):
            values[name] = matrix_error(m_est.T, truth.T, kind)
        elif name in ("frob_L", "inf_L"):
            values[name] = matrix_error(L_est.dense(), L_true.dense(), kind)
        elif name in ("frob_omega", "inf_omega"):
            values[name] = matrix_error(precision(L_est), precision(L_true), kind)
        elif name in ("frob_sigma", "inf_sigma"):
            values[name] = matrix_error(covariance(L_est), covariance(L_true), kind)
        elif name == "kl":
            values[name] = kl_loss(precision(L_est), covariance(L_true))
        elif name == "tv_T1":
            values[name] = total_variation(np.diag(m_est.T, -1))
    write_metrics(args.out, values)
    entries = {
        "command": "evaluate",
        "estimate": args.estimate,
        "truth": args.truth,
        "metrics": ",".join(requested),
        "out": args.out,
    }
    entries.update(versions())
    write_manifest(args.out + ".manifest.txt", entries)


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "tune": cmd_tune,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
        return 0
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SmoothCholError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
