"""Logistic-normal simulation and synthetic ground truths.

Random streams come from numpy's counter-based Philox generator keyed by a
tuple of integers, so any (seed, repetition, stage) triple always yields the
same stream no matter in which order or process it is drawn.
"""

from __future__ import annotations

import numpy as np

from .composition import alr, alr_inverse, as_composition, normalize_ref
from .covariance import CovMatrix, omega_to_sigma
from .errors import NotPositiveDefinite, ShapeMismatch

STAGE_TRUTH = 0
STAGE_SAMPLE = 1
STAGE_SUBSET = 2


def stream(*keys: int) -> np.random.Generator:
    """Independent Philox generator for a key tuple of nonnegative ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in keys])))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return stream(*seed)
    return stream(seed)


def _cholesky(Sigma):
    try:
        return np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("Sigma is not positive definite") from exc


def _mu_sigma(mu, Sigma):
    S = Sigma.values if isinstance(Sigma, CovMatrix) else np.asarray(Sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or mu.shape != (S.shape[0],):
        raise ShapeMismatch("mu must be a vector matching the square Sigma")
    return mu, S


def sample_logistic_normal(mu, Sigma, N: int, seed, ref: int = -1):
    """Draw ``N`` logistic-normal compositions.

    ``alr(p, ref) ~ Normal(mu, Sigma)``. ``seed`` is an int, a key tuple for
    :func:`stream`, or a ``numpy`` Generator.
    """
    mu, S = _mu_sigma(mu, Sigma)
    if isinstance(Sigma, CovMatrix) and Sigma.kind == "ALR":
        ref = Sigma.ref
    L = _cholesky(S)
    z = _as_rng(seed).standard_normal((int(N), mu.size))
    return alr_inverse(mu + z @ L.T, ref)


def logistic_normal_logdensity(p, mu, Sigma, ref: int = -1):
    """Log-density of compositions under the logistic normal.

    ``log f_N(alr(p)) - sum_j log p_j``, with respect to Lebesgue measure on
    the first D-1 (non-reference) coordinates of the simplex.
    """
    mu, S = _mu_sigma(mu, Sigma)
    P = as_composition(p)
    L = _cholesky(S)
    x = alr(P, ref)
    k = mu.size
    if x.shape[-1] != k:
        raise ShapeMismatch("composition has the wrong number of parts")
    z = np.linalg.solve(L, np.atleast_2d(x - mu).T)
    logn = -0.5 * (z * z).sum(axis=0) - np.log(np.diag(L)).sum() - 0.5 * k * np.log(2 * np.pi)
    out = logn - np.log(np.atleast_2d(P)).sum(axis=1)
    return out[0] if np.ndim(p) == 1 else out


def factor_basis_covariance(D: int, rng, n_factors: int = 3, loading_scale: float = 0.6,
                            log_var_mean: float = -1.0, log_var_sd: float = 0.8,
                            sparsity: float = 0.5):
    """Random full-rank basis covariance with a few shared factors.

    ``Omega = B B^T + diag(psi)`` with sparse Gaussian loadings ``B`` and
    log-normally spread idiosyncratic variances ``psi``. Used as a stand-in
    for a covariance estimated from a large zero-free expression matrix.
    """
    B = rng.normal(0.0, loading_scale, size=(D, n_factors))
    B *= rng.random((D, n_factors)) >= sparsity
    psi = np.exp(rng.normal(log_var_mean, log_var_sd, size=D))
    W = B @ B.T + np.diag(psi)
    return 0.5 * (W + W.T)


class SyntheticTruth:
    """A pool of parts from which each repetition draws its ground truth.

    Mirrors choosing D random parts from a larger expression data set: a
    pool basis covariance and log-mean are drawn once; each repetition picks
    ``D`` parts and uses the ALR mean and covariance of that subcomposition.
    """

    def __init__(self, pool_size: int = 240, seed: int = 0, **factor_kwargs):
        rng = stream(seed, STAGE_TRUTH)
        self.pool_size = pool_size
        self.omega = factor_basis_covariance(pool_size, rng, **factor_kwargs)
        self.log_mean = rng.normal(0.0, 1.0, size=pool_size)

    def draw(self, D: int, rng):
        """Return ``(mu, Sigma)`` for a random D-part subcomposition."""
        if D > self.pool_size:
            raise ValueError(f"D={D} exceeds the pool of {self.pool_size} parts")
        idx = np.sort(rng.choice(self.pool_size, size=D, replace=False))
        W = CovMatrix(self.omega[np.ix_(idx, idx)], "BASIS")
        m = self.log_mean[idx]
        return m[:-1] - m[-1], omega_to_sigma(W, -1)


def fixed_truth(mu, Sigma, ref: int = -1):
    """Wrap a user-supplied ``(mu, Sigma)`` as an ALR CovMatrix pair."""
    mu, S = _mu_sigma(mu, Sigma)
    ref = normalize_ref(ref, mu.size + 1)
    return mu, CovMatrix(S, "ALR", ref=ref)


def synthetic_count_dataset(D: int, n_zero_free: int, n_with_zeros: int, depth: float,
                            seed: int, truth: SyntheticTruth | None = None,
                            max_draws: int = 1_000_000):
    """Multinomial counts from logistic-normal frequencies.

    Rows are drawn until ``n_zero_free`` rows without zeros and
    ``n_with_zeros`` rows with at least one zero have been collected. Depths
    are Poisson with mean ``depth``. Returns the counts with zero-free rows
    first.
    """
    truth = truth or SyntheticTruth(pool_size=max(D, 240), seed=seed)
    rng = stream(seed, STAGE_SAMPLE)
    mu, Sigma = truth.draw(D, rng)
    zero_free, with_zeros = [], []
    drawn = 0
    batch = max(64, n_zero_free + n_with_zeros)
    while len(zero_free) < n_zero_free or len(with_zeros) < n_with_zeros:
        P = sample_logistic_normal(mu, Sigma, batch, rng)
        depths = np.maximum(rng.poisson(depth, size=batch), 1)
        counts = rng.multinomial(depths, P)
        for row in counts:
            if np.all(row > 0):
                if len(zero_free) < n_zero_free:
                    zero_free.append(row)
            elif len(with_zeros) < n_with_zeros:
                with_zeros.append(row)
        drawn += batch
        if drawn > max_draws:
            raise RuntimeError("could not reach the requested zero/zero-free row counts; adjust depth")
    rows = zero_free + with_zeros
    return np.array(rows, dtype=np.int64).reshape(len(rows), D)
