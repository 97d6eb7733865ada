"""Command line interface.

Part indices on the command line (``--ref``, ``--pair``) are 1-based.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .benchmark import BenchmarkScenario, run_scenario
from .composition import alr, as_composition, as_counts, clr, closure, read_matrix, write_matrix
from .covariance import CovMatrix, gamma_to_sigma, partial_correlation, sample_covariance, write_cov
from .errors import CodaError
from .imputation import impute
from .lu import as_alpha, dilution_experiment, strongest_pair
from .shrinkage import shrink_basis_pipeline, shrink_logratio_direct
from .simulation import sample_logistic_normal

METHODS = ("basis", "naive-alr", "naive-clr", "lu-alr", "lu-clr", "none")


def _ref_index(ref, D):
    if ref is None:
        return D - 1
    if not 1 <= ref <= D:
        raise CodaError(f"--ref must be between 1 and {D}")
    return ref - 1


def _compositions(values, kind):
    if kind == "counts":
        counts = as_counts(values)
        if np.any(counts == 0):
            raise CodaError("counts contain zeros; run 'codashrink impute' first")
        return closure(counts)
    return as_composition(closure(values))


def cmd_shrink(args):
    values, labels = read_matrix(args.input, header=args.header)
    P = _compositions(values, args.kind)
    N, D = P.shape
    ref = _ref_index(args.ref, D)
    method = args.method
    repr_ = (args.repr or ("alr" if method.endswith("alr") else "clr")).upper()
    if method in ("naive-alr", "lu-alr") and repr_ != "ALR" or \
            method in ("naive-clr", "lu-clr") and repr_ != "CLR":
        raise CodaError(f"--method {method} produces the {method[-3:].upper()} representation")
    vs = not args.no_variance_shrinkage
    if method == "basis":
        est = shrink_basis_pipeline(P, "compositions", repr_, ref, with_variance_shrinkage=vs)
        cov, report = est.covariance, est.report(N)
    elif method == "none":
        if repr_ == "ALR":
            cov = CovMatrix(sample_covariance(alr(P, ref)), "ALR", ref=ref)
        else:
            cov = CovMatrix(sample_covariance(clr(P)), "CLR")
        report = {"lambda": 0.0, "lambda_var": None, "lambda_preclamp": None,
                  "target_kind": None, "D": D, "N": N}
    else:
        if repr_ == "ALR":
            X = alr(P, ref)
            C = CovMatrix(sample_covariance(X), "ALR", ref=ref)
        else:
            X = clr(P)
            C = CovMatrix(sample_covariance(X), "CLR")
        kind = {"naive-alr": "CUSTOM", "naive-clr": "CUSTOM",
                "lu-alr": "LU_ALR", "lu-clr": "LU_CLR"}[method]
        est = shrink_logratio_direct(C, X, kind, with_variance_shrinkage=vs)
        cov, report = est.covariance, est.report(N)
    write_cov(args.out, cov)
    if args.lambda_report:
        with open(args.lambda_report, "w") as fh:
            json.dump(report, fh, indent=2)
    if args.pcor:
        G = cov if cov.kind == "CLR" else None
        R = partial_correlation(G if G is not None else cov)
        part_labels = labels
        if cov.kind == "ALR" and labels is not None:
            part_labels = [lab for k, lab in enumerate(labels) if k != cov.ref]
        write_matrix(args.pcor, R, labels=part_labels)
    return 0


def cmd_impute(args):
    values, labels = read_matrix(args.input, header=args.header)
    out = impute(values, args.method, args.delta_fraction)
    write_matrix(args.out, out.values, labels=labels)
    return 0


def cmd_lu_dilution(args):
    values, _ = read_matrix(args.alpha)
    alpha = as_alpha(values.ravel())
    if args.pair:
        i, j = (int(s) - 1 for s in args.pair.split(","))
    else:
        i, j = strongest_pair(alpha)
    series = dilution_experiment(alpha, (i, j), order=args.order, seed=args.seed)
    with open(args.out, "w") as fh:
        fh.write("D,r\n")
        for D, r in series:
            fh.write(f"{D},{r!r}\n")
    return 0


def cmd_benchmark(args):
    scenario = BenchmarkScenario.from_toml(args.scenario)
    report = run_scenario(scenario, threads=args.threads)
    report.to_csv(args.out)
    return 0


def cmd_simulate(args):
    mu, _ = read_matrix(args.mu)
    sigma, _ = read_matrix(args.sigma)
    P = sample_logistic_normal(mu.ravel(), sigma, args.n, args.seed)
    write_matrix(args.out, P)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="codashrink", description="Covariance shrinkage for compositional data.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shrink", help="shrinkage estimate of a logratio covariance")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true", help="first row holds part labels")
    p.add_argument("--kind", choices=("counts", "compositions"), default="compositions")
    p.add_argument("--method", choices=METHODS, default="basis")
    p.add_argument("--repr", choices=("alr", "clr"), help="output representation")
    p.add_argument("--ref", type=int, help="1-based ALR reference part (default: last)")
    p.add_argument("--no-variance-shrinkage", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--lambda-report")
    p.add_argument("--pcor", help="also write partial correlations here")
    p.set_defaults(func=cmd_shrink)

    p = sub.add_parser("impute", help="replace count zeros")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--method", choices=("czm", "freq-shrink"), default="czm")
    p.add_argument("--delta-fraction", type=float, default=0.65)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("lu-dilution", help="closure-induced partial correlation vs D")
    p.add_argument("--alpha", required=True)
    p.add_argument("--pair", help="1-based 'i,j' (default: strongest pair)")
    p.add_argument("--order", choices=("smallest", "random"), default="smallest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lu_dilution)

    p = sub.add_parser("benchmark", help="run a Monte-Carlo benchmark scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("simulate", help="draw logistic-normal compositions")
    p.add_argument("--mu", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CodaError, OSError) as exc:
        print(f"codashrink: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
