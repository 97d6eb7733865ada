"""Monte-Carlo benchmarks of logratio covariance and partial correlation estimators.

Four estimator arms are compared against a ground truth by elementwise mean
squared error:

``none``       sample covariance, partial correlations via the CLR pseudoinverse
``naive-alr``  ALR covariance shrunk towards its own diagonal
``naive-clr``  CLR covariance shrunk towards its own diagonal
``basis``      constant-size basis covariance shrunk towards its diagonal, then
               mapped to ALR/CLR

Every repetition draws from its own Philox stream keyed by
``(master_seed, repetition, stage, N)``; records are sorted before output so
reports do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import partial
from pathlib import Path

import numpy as np

from .composition import alr, as_counts, clr, closure, read_matrix
from .covariance import (
    CovMatrix,
    gamma_to_sigma,
    partial_correlation,
    sample_covariance,
    sigma_to_gamma,
)
from .errors import InsufficientZeroFreeRows, ShapeMismatch
from .imputation import impute
from .shrinkage import shrink_basis_pipeline, shrink_to_diagonal
from .simulation import (
    STAGE_SAMPLE,
    STAGE_SUBSET,
    STAGE_TRUTH,
    SyntheticTruth,
    fixed_truth,
    sample_logistic_normal,
    stream,
    synthetic_count_dataset,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ESTIMATORS = ("none", "naive-alr", "naive-clr", "basis")
METRICS = ("cov_clr", "cov_alr", "pcor")


def elementwise_mse(A, B, off_diagonal: bool = False) -> float:
    """Mean squared difference over all entries, or off-diagonal ones only."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} and {B.shape} differ")
    diff2 = (A - B) ** 2
    if off_diagonal:
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ShapeMismatch("off-diagonal MSE needs square matrices")
        n = A.shape[0]
        if n < 2:
            return 0.0
        return float((diff2.sum() - np.trace(diff2)) / (n * n - n))
    return float(diff2.mean())


@dataclass(frozen=True)
class BenchmarkScenario:
    """Configuration of a benchmark run.

    ``ground_truth`` selects the truth source:

    * ``{"source": "synthetic", "pool_size": 240, ...}`` -- random factor-model
      pool, extra keys go to :func:`~codashrink.simulation.factor_basis_covariance`;
    * ``{"source": "fixed", "mu": path, "sigma": path}`` -- a single (mu, Sigma);
    * ``{"source": "dataset", "path": path, "zero_free": true}`` -- parts drawn
      from the columns of a count/composition CSV.

    For the subsampling benchmark (``benchmark = "subsample"``)
    ``imputation`` lists the arms, where ``"none"`` samples only from
    zero-free rows, and ``dataset`` is either ``{"path": ..., "header": bool}``
    or ``{"synthetic": {...}}`` with keyword arguments for
    :func:`~codashrink.simulation.synthetic_count_dataset`.
    """

    D: int
    N_list: tuple[int, ...]
    repetitions: int
    estimators: tuple[str, ...] = ESTIMATORS
    imputation: tuple[str, ...] = ("none",)
    master_seed: int = 0
    ground_truth: dict = field(default_factory=lambda: {"source": "synthetic"})
    variance_shrinkage: bool = True
    delta_fraction: float = 0.65
    benchmark: str = "synthetic"
    dataset: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "N_list", tuple(int(n) for n in self.N_list))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "imputation", tuple(self.imputation))
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.estimators:
            raise ValueError("estimator list must not be empty")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators {sorted(unknown)}")
        if self.D < 3:
            raise ValueError("D must be >= 3")
        if any(n < 3 for n in self.N_list):
            raise ValueError("every N must be >= 3")
        if self.benchmark not in ("synthetic", "subsample"):
            raise ValueError(f"unknown benchmark type {self.benchmark!r}")
        if self.benchmark == "subsample" and not self.dataset:
            raise ValueError("the subsample benchmark needs a dataset")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkScenario":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ValueError(f"unknown scenario keys {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_toml(cls, path) -> "BenchmarkScenario":
        with open(path, "rb") as fh:
            d = tomllib.load(fh)
        base = Path(path).parent
        for table in (d.get("ground_truth"), d.get("dataset")):
            for key in ("path", "mu", "sigma"):
                if table and key in table and not Path(table[key]).is_absolute():
                    table[key] = str(base / table[key])
        return cls.from_dict(d)


@dataclass(frozen=True, order=True)
class Record:
    repetition: int
    N: int
    estimator: str
    imputation: str
    metric: str
    mse: float
    singular: bool = False


@dataclass
class BenchmarkReport:
    records: list[Record]

    def __post_init__(self):
        self.records = sorted(self.records)

    def to_csv(self, path=None) -> str:
        """Tidy CSV, one record per line; floats written with ``repr``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f.name for f in fields(Record)])
        for r in self.records:
            w.writerow([r.repetition, r.N, r.estimator, r.imputation, r.metric,
                        repr(r.mse), int(r.singular)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "BenchmarkReport":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls([Record(int(r["repetition"]), int(r["N"]), r["estimator"], r["imputation"],
                           r["metric"], float(r["mse"]), bool(int(r["singular"]))) for r in rows])

    def values(self, estimator, N, metric="pcor", imputation=None):
        return np.array([r.mse for r in self.records
                         if r.estimator == estimator and r.N == N and r.metric == metric
                         and (imputation is None or r.imputation == imputation)])

    def median(self, estimator, N, metric="pcor", imputation=None) -> float:
        return float(np.median(self.values(estimator, N, metric, imputation)))

    def as_dicts(self):
        return [asdict(r) for r in self.records]


def _truth_matrices(Sigma: CovMatrix):
    G = sigma_to_gamma(Sigma)
    return G.values, Sigma.values, partial_correlation(G)


def estimate_arms(P, estimators=ESTIMATORS, variance_shrinkage: bool = True):
    """Covariances and partial correlations from each estimator arm.

    Returns ``{estimator: (clr_cov, alr_cov, pcor, singular)}``; the ALR
    reference is the last part and partial correlations are always D x D,
    taken from the CLR (pseudo)inverse.
    """
    N, D = P.shape
    out = {}
    X = Y = None
    if {"none", "naive-alr"} & set(estimators):
        X = alr(P)
    if {"none", "naive-clr"} & set(estimators):
        Y = clr(P)
    for est in estimators:
        if est == "none":
            S = CovMatrix(sample_covariance(X), "ALR")
            G = CovMatrix(sample_covariance(Y), "CLR")
            out[est] = (G.values, S.values, partial_correlation(G), N - 1 < D - 1)
        elif est == "naive-alr":
            S = sample_covariance(X)
            W = shrink_to_diagonal(S, X, variance_shrinkage)[0]
            G = sigma_to_gamma(CovMatrix(W, "ALR"))
            out[est] = (G.values, W, partial_correlation(G), False)
        elif est == "naive-clr":
            G0 = sample_covariance(Y)
            W = shrink_to_diagonal(G0, Y, variance_shrinkage)[0]
            G = CovMatrix(W, "CLR")
            out[est] = (W, gamma_to_sigma(G).values, partial_correlation(G), False)
        elif est == "basis":
            G = shrink_basis_pipeline(P, "compositions", "CLR",
                                      with_variance_shrinkage=variance_shrinkage).covariance
            out[est] = (G.values, gamma_to_sigma(G).values, partial_correlation(G), False)
        else:
            raise ValueError(f"unknown estimator {est!r}")
    return out


def _score(rep, N, imputation, arms, truth):
    G, S, R = truth
    recs = []
    for est, (g, s, r, singular) in arms.items():
        recs.append(Record(rep, N, est, imputation, "cov_clr", elementwise_mse(g, G), singular))
        recs.append(Record(rep, N, est, imputation, "cov_alr", elementwise_mse(s, S), singular))
        recs.append(Record(rep, N, est, imputation, "pcor",
                           elementwise_mse(r, R, off_diagonal=True), singular))
    return recs


class _TruthSource:
    def __init__(self, scenario: BenchmarkScenario):
        gt = dict(scenario.ground_truth)
        self.kind = gt.pop("source", "synthetic")
        if self.kind == "synthetic":
            gt.setdefault("pool_size", max(240, scenario.D))
            self.pool = SyntheticTruth(seed=scenario.master_seed, **gt)
        elif self.kind == "fixed":
            mu, _ = read_matrix(gt["mu"])
            sigma, _ = read_matrix(gt["sigma"])
            self.fixed = fixed_truth(mu.ravel(), sigma)
            if self.fixed[0].size != scenario.D - 1:
                raise ShapeMismatch("fixed truth dimension does not match D")
        elif self.kind == "dataset":
            data, _ = read_matrix(gt["path"], header=gt.get("header", False))
            if gt.get("zero_free", True):
                data = data[np.all(data > 0, axis=1)]
            if data.shape[0] < 2 or data.shape[1] < scenario.D:
                raise InsufficientZeroFreeRows("dataset too small for the requested D")
            self.logdata = np.log(closure(data))
        else:
            raise ValueError(f"unknown ground truth source {self.kind!r}")

    def draw(self, D, rng):
        if self.kind == "synthetic":
            return self.pool.draw(D, rng)
        if self.kind == "fixed":
            return self.fixed
        idx = np.sort(rng.choice(self.logdata.shape[1], size=D, replace=False))
        L = self.logdata[:, idx]
        X = L[:, :-1] - L[:, [-1]]
        return X.mean(axis=0), CovMatrix(sample_covariance(X), "ALR")


def _synthetic_rep(rep, scenario: BenchmarkScenario, source: _TruthSource):
    seed = scenario.master_seed
    mu, Sigma = source.draw(scenario.D, stream(seed, rep, STAGE_TRUTH))
    truth = _truth_matrices(Sigma)
    recs = []
    for N in scenario.N_list:
        P = sample_logistic_normal(mu, Sigma, N, stream(seed, rep, STAGE_SAMPLE, N))
        arms = estimate_arms(P, scenario.estimators, scenario.variance_shrinkage)
        recs.extend(_score(rep, N, "none", arms, truth))
    return recs


def _run(fn, scenario, threads):
    reps = range(scenario.repetitions)
    if threads is None or threads <= 1:
        chunks = [fn(r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(fn, reps))
    return BenchmarkReport([r for chunk in chunks for r in chunk])


def run_synthetic_benchmark(scenario: BenchmarkScenario, threads: int | None = None) -> BenchmarkReport:
    """Logistic-normal benchmark.

    For each repetition: draw a ground truth ``(mu, Sigma)``, then for each
    N sample N compositions, run the estimator arms and score them against
    the population CLR/ALR covariance and partial correlations.
    """
    fn = partial(_synthetic_rep, scenario=scenario, source=_TruthSource(scenario))
    return _run(fn, scenario, threads)


def _pool_truth(counts_sub, pool_rows):
    P = closure(counts_sub[pool_rows])
    S = CovMatrix(sample_covariance(alr(P)), "ALR")
    G = CovMatrix(sample_covariance(clr(P)), "CLR")
    return G.values, S.values, partial_correlation(G)


def _subsample_rep(rep, counts, scenario: BenchmarkScenario):
    seed = scenario.master_seed
    n_rows, n_cols = counts.shape
    cols = np.sort(stream(seed, rep, STAGE_SUBSET).choice(n_cols, size=scenario.D, replace=False))
    sub = counts[:, cols]
    pool = np.flatnonzero(np.all(sub > 0, axis=1))
    if pool.size < max(scenario.N_list):
        raise InsufficientZeroFreeRows(
            f"only {pool.size} zero-free rows for N up to {max(scenario.N_list)}")
    nonempty = np.flatnonzero(sub.sum(axis=1) > 0)
    truth = _pool_truth(sub, pool)
    recs = []
    for N in scenario.N_list:
        rng = stream(seed, rep, STAGE_SAMPLE, N)
        for imp in scenario.imputation:
            if imp == "none":
                rows = np.sort(rng.choice(pool, size=N, replace=False))
                P = closure(sub[rows])
            else:
                rows = np.sort(rng.choice(nonempty, size=N, replace=False))
                P = impute(sub[rows], imp, scenario.delta_fraction).values
            arms = estimate_arms(P, scenario.estimators, scenario.variance_shrinkage)
            recs.extend(_score(rep, N, imp, arms, truth))
    return recs


def run_subsample_benchmark(dataset, scenario: BenchmarkScenario,
                            threads: int | None = None) -> BenchmarkReport:
    """Subsampling benchmark on a count matrix.

    Each repetition chooses ``scenario.D`` random columns. The ground truth
    is the unshrunk covariance and partial correlation of all rows that are
    zero-free in those columns. Samples of each size N are drawn from the
    zero-free rows (imputation ``"none"``) or from all rows followed by the
    named imputation, and scored like the synthetic benchmark.
    """
    counts = as_counts(dataset)
    if scenario.D > counts.shape[1]:
        raise ShapeMismatch(f"D={scenario.D} exceeds the {counts.shape[1]} columns")
    fn = partial(_subsample_rep, counts=counts, scenario=scenario)
    return _run(fn, scenario, threads)


def load_dataset(spec: dict):
    """Count matrix named by a scenario's ``dataset`` table."""
    if "path" in spec:
        values, _ = read_matrix(spec["path"], header=spec.get("header", False))
        return as_counts(values)
    if "synthetic" in spec:
        return synthetic_count_dataset(**spec["synthetic"])
    raise ValueError("dataset needs either 'path' or 'synthetic'")


def run_scenario(scenario: BenchmarkScenario, threads: int | None = None) -> BenchmarkReport:
    """Run whichever benchmark the scenario names."""
    if scenario.benchmark == "synthetic":
        return run_synthetic_benchmark(scenario, threads)
    return run_subsample_benchmark(load_dataset(scenario.dataset), scenario, threads)
