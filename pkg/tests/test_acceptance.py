"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict; the lines are printed in the
pytest terminal summary, or directly when this file is run as a script.
Optional data-dependent checks run only when CODASHRINK_ALPHA points at a
CSV with the basis variances of the 770-gene data set.
"""

import os
import time

import numpy as np
import pytest

from codashrink.benchmark import BenchmarkScenario, run_scenario
from codashrink.covariance import (
    CovMatrix,
    logratio_to_omega,
    omega_to_gamma,
    omega_to_sigma,
    partial_correlation,
    sample_covariance,
    sigma_to_gamma,
    gamma_to_sigma,
)
from codashrink.composition import clr, closure
from codashrink.lu import (
    dilution_experiment,
    lu_determinant,
    lu_gamma,
    lu_partial_correlation,
    lu_sigma,
    lu_sigma_inverse,
    strongest_pair,
)
from codashrink.shrinkage import WishartPrior, bayes_equivalence, lu_target_alr, lu_target_clr, shrink

VERDICTS = []


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def spd(rng, k):
    A = rng.normal(size=(k, k + 2))
    return A @ A.T / k + 0.5 * np.eye(k)


def test_1_lu_closed_forms():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_inv = worst_det = worst_pc = 0.0
    for _ in range(500):
        D = int(rng.integers(3, 51))
        a = rng.uniform(0.1, 10.0, size=D)
        S = lu_sigma(a).values
        worst_inv = max(worst_inv, np.abs(S @ lu_sigma_inverse(a) - np.eye(D - 1)).max())
        det = np.linalg.det(S)
        worst_det = max(worst_det, abs(lu_determinant(a) - det) / det)
        worst_pc = max(worst_pc, np.abs(lu_partial_correlation(a) - partial_correlation(S)).max())
    dt = time.perf_counter() - t0
    ok = worst_inv < 1e-9 and worst_det < 1e-9 and worst_pc < 1e-10 and dt < 1.0
    record(1, ok, f"inverse {worst_inv:.1e} (<1e-9), det rel {worst_det:.1e} (<1e-9), "
                  f"pcor {worst_pc:.1e} (<1e-10), {dt:.2f}s (<1s)")


def test_2_table_consistency():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    rt = comm = basis = 0.0
    for _ in range(100):
        D = int(rng.integers(3, 12))
        ref = int(rng.integers(D))
        S = CovMatrix(spd(rng, D - 1), "ALR", ref=ref)
        rt = max(rt, np.abs(gamma_to_sigma(sigma_to_gamma(S), ref).values - S.values).max())
        W = spd(rng, D)
        comm = max(comm, np.abs(sigma_to_gamma(omega_to_sigma(W, ref)).values
                                - omega_to_gamma(W).values).max())
        P = closure(np.exp(rng.normal(size=(20, D))))
        logm = np.log(P)
        G = CovMatrix(sample_covariance(clr(P)), "CLR")
        basis = max(basis, np.abs(logratio_to_omega(G, logm, P).values
                                  - sample_covariance(logm)).max())
    dt = time.perf_counter() - t0
    ok = rt < 1e-10 and comm < 1e-10 and basis < 1e-9 and dt < 1.0
    record(2, ok, f"round trip {rt:.1e} (<1e-10), commute {comm:.1e} (<1e-10), "
                  f"basis {basis:.1e} (<1e-9), {dt:.2f}s (<1s)")


def test_3_reference_invariance():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        D = int(rng.integers(3, 15))
        W = spd(rng, D)
        full = partial_correlation(omega_to_gamma(W))
        for r in range(D):
            keep = [k for k in range(D) if k != r]
            R = partial_correlation(omega_to_sigma(W, r))
            worst = max(worst, np.abs(R - full[np.ix_(keep, keep)]).max())
    record(3, worst < 1e-9, f"max deviation {worst:.1e} over all references (<1e-9)")


def test_4_lu_target_fixed_point():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(200):
        D = int(rng.integers(3, 30))
        a = rng.uniform(0.1, 5.0, size=D)
        S = lu_sigma(a, int(rng.integers(D)))
        G = lu_gamma(a)
        worst = max(worst, np.abs(lu_target_alr(S).values - S.values).max(),
                    np.abs(lu_target_clr(G).values - G.values).max())
    record(4, worst < 1e-12, f"max deviation {worst:.1e} (<1e-12)")


def test_5_bayes_equivalence():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 8))
        prior = WishartPrior(nu=int(rng.integers(k, 4 * k + 1)), V=spd(rng, k),
                             kappa=float(rng.uniform(0.1, 10)), mu0=rng.normal(size=k))
        N = int(rng.integers(2, 100))
        xbar, S = rng.normal(size=k), spd(rng, k)
        lam, T = bayes_equivalence(prior, N, xbar, S)
        d = xbar - prior.mu0
        rhs = (N - 1) * S + prior.V + prior.kappa * N / (prior.kappa + N) * np.outer(d, d)
        worst = max(worst, np.abs((prior.nu + N) * shrink(S, T, lam) - rhs).max()
                    / max(1.0, np.abs(rhs).max()))
    spot, _ = bayes_equivalence(WishartPrior(1, np.eye(1), 1.0, np.zeros(1)), 3,
                                np.zeros(1), np.eye(1))
    record(5, worst < 1e-10 and spot == 0.5,
           f"identity residual {worst:.1e} (<1e-10), lambda(nu=1,N=3)={spot}")


@pytest.mark.slow
def test_6_synthetic_ordering():
    sc = BenchmarkScenario(D=40, N_list=[8, 40, 200], repetitions=100, master_seed=2024)
    t0 = time.perf_counter()
    rep = run_scenario(sc, threads=1)
    dt = time.perf_counter() - t0
    med = {(e, N): rep.median(e, N) for e in sc.estimators for N in sc.N_list}
    checks = [med["basis", N] < med["naive-alr", N] and med["basis", N] < med["none", N]
              for N in (8, 40)]
    checks.append(med["naive-clr", 200] > med["none", 200])
    table = "; ".join(f"N={N}: " + ", ".join(f"{e}={med[e, N]:.4g}" for e in sc.estimators)
                      for N in sc.N_list)
    record(6, all(checks) and dt < 300,
           f"basis<naive-alr, basis<none at N=8,40 and naive-clr>none at N=200 "
           f"-> {checks}; {dt:.1f}s single-threaded (<300s); medians {table}")


@pytest.mark.slow
def test_7_dilution():
    series = dilution_experiment(np.ones(770), (0, 1))
    Ds = [d for d, _ in series]
    rs = np.array([r for _, r in series])
    exact = Ds == list(range(3, 771)) and all(r == 1 / (d - 1) for d, r in series)
    monotone = bool(np.all(np.diff(rs) < 0)) and rs[-1] < 2e-3
    record(7, exact and monotone,
           f"equal alpha gives 1/(D-1) exactly for D=3..770: {exact}; "
           f"strictly decreasing to {rs[-1]:.2e}: {monotone}")


@pytest.mark.slow
def test_8_imputation_effect():
    sc = BenchmarkScenario(
        D=60, N_list=[400, 100, 30], repetitions=200, master_seed=8,
        imputation=["none", "czm", "freq-shrink"], benchmark="subsample",
        dataset={"synthetic": {"D": 80, "n_zero_free": 800, "n_with_zeros": 800,
                               "depth": 10000, "seed": 8}})
    t0 = time.perf_counter()
    rep = run_scenario(sc, threads=1)
    dt = time.perf_counter() - t0
    lines, ok = [], dt < 120
    for est in sc.estimators:
        cells = []
        for N in sc.N_list:
            base = rep.median(est, N, imputation="none")
            worse = [rep.median(est, N, imputation=m) > base for m in ("czm", "freq-shrink")]
            cells.append(f"N={N}:{'ok' if all(worse) else 'no'}")
            if est == "basis":
                ok = ok and all(worse)
        lines.append(f"{est}[{' '.join(cells)}]")
    record(8, ok, f"imputed > zero-free median pcor-MSE for the basis arm at every N "
                  f"({dt:.1f}s, <120s); all arms: {'; '.join(lines)}")


def test_9_determinism(tmp_path):
    synth = BenchmarkScenario(D=12, N_list=[8, 40], repetitions=6, master_seed=99)
    sub = BenchmarkScenario(
        D=8, N_list=[20], repetitions=4, master_seed=99, imputation=["none", "czm"],
        benchmark="subsample",
        dataset={"synthetic": {"D": 10, "n_zero_free": 50, "n_with_zeros": 30,
                               "depth": 500, "seed": 99}})
    same = True
    for sc in (synth, sub):
        outs = []
        for run, threads in enumerate((1, 1, 2, 4)):
            path = tmp_path / f"r{run}.csv"
            run_scenario(sc, threads).to_csv(path)
            outs.append(path.read_bytes())
        same = same and all(o == outs[0] for o in outs)
    record(9, same, "synthetic and subsample reports byte-identical across repeated runs "
                    "and thread counts 1, 2, 4")


ALPHA_PATH = os.environ.get("CODASHRINK_ALPHA")


@pytest.mark.data
@pytest.mark.skipif(not ALPHA_PATH, reason="set CODASHRINK_ALPHA to the 770-gene basis variances")
def test_7_data_dependent_endpoints():
    from codashrink.composition import read_matrix
    alpha = read_matrix(ALPHA_PATH)[0].ravel()
    series = dilution_experiment(alpha, strongest_pair(alpha))
    first, last = series[0][1], series[-1][1]
    record("7 (data)", abs(first - 0.69) < 0.01 and abs(last - 0.001) < 5e-4,
           f"D=3 -> {first:.3f} (0.69), D={series[-1][0]} -> {last:.4f} (0.001)")


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_") or (name.endswith("endpoints") and not ALPHA_PATH):
            continue
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
