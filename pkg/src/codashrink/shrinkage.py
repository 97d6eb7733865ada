"""James-Stein shrinkage of logratio and basis covariance matrices.

The shrinkage intensity follows the analytic Ledoit-Wolf / Schafer-Strimmer
optimum with the empirical moments

    var(s_ij)        ~ N / (N-1)**3 * sum_m (w_mij - wbar_ij)**2
    cov(s_ij, s_kl)  ~ N / (N-1)**3 * sum_m (w_mij - wbar_ij)(w_mkl - wbar_kl)

where ``w_mij`` is the product of the centred observations ``i`` and ``j``
of sample ``m``. Only off-diagonal entries enter the intensity; variances
are optionally shrunk separately towards their median.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .composition import as_composition, as_counts, closure
from .covariance import (
    CovMatrix,
    double_centre,
    omega_to_gamma,
    omega_to_sigma,
    sample_covariance,
    sigma_to_gamma,
)
from .errors import (
    LambdaOutOfRange,
    RepresentationMismatch,
    ShapeMismatch,
    TooFewSamples,
    ZeroEntry,
)
from .lu import implied_alpha

TARGET_KINDS = ("DIAGONAL", "LU_ALR", "LU_CLR", "CUSTOM")


@dataclass(frozen=True)
class ShrinkageEstimate:
    covariance: CovMatrix
    lam: float
    lambda_preclamp: float
    target_kind: str
    lambda_var: float | None = None
    lambda_var_preclamp: float | None = None
    approximate: bool = False
    basis: CovMatrix | None = None
    notes: dict = field(default_factory=dict)

    def report(self, N: int | None = None) -> dict:
        """Summary used for the JSON lambda report."""
        return {
            "lambda": self.lam,
            "lambda_var": self.lambda_var,
            "lambda_preclamp": self.lambda_preclamp,
            "target_kind": self.target_kind,
            "D": self.covariance.D,
            "N": N,
            "approximate": self.approximate,
            **self.notes,
        }


@dataclass(frozen=True)
class WishartPrior:
    """Normal-Wishart prior on the mean and precision of ALR data."""

    nu: int
    V: np.ndarray
    kappa: float
    mu0: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ShapeMismatch("V must be square")
        if not np.allclose(V, V.T, atol=1e-10):
            raise ValueError("V must be symmetric")
        if np.linalg.eigvalsh(V).min() <= 0:
            raise ValueError("V must be positive definite")
        if int(self.nu) != self.nu or self.nu < V.shape[0]:
            raise ValueError("nu must be an integer >= dimension")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        mu0 = np.asarray(self.mu0, dtype=float)
        if mu0.shape != (V.shape[0],):
            raise ShapeMismatch("mu0 must match the dimension of V")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "mu0", mu0)


def shrink(S, T, lam: float):
    """Convex combination ``lam * T + (1 - lam) * S``."""
    S = np.asarray(S, dtype=float)
    T = np.asarray(T, dtype=float)
    if S.shape != T.shape:
        raise ShapeMismatch(f"S {S.shape} and T {T.shape} differ in shape")
    if not 0.0 <= lam <= 1.0:
        raise LambdaOutOfRange(f"lambda={lam} not in [0, 1]")
    return lam * T + (1.0 - lam) * S


def _centred(X, min_n=3):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be an N x k matrix")
    if X.shape[0] < min_n:
        raise TooFewSamples(f"need N >= {min_n} samples, got {X.shape[0]}")
    return X - X.mean(axis=0)


def _moment_scale(N):
    return N / (N - 1) ** 3


def covariance_variances(X):
    """Empirical ``var(s_ij)`` for every entry of the sample covariance."""
    Xc = _centred(X)
    N = Xc.shape[0]
    wbar = Xc.T @ Xc / N
    sq = Xc * Xc
    return _moment_scale(N) * (sq.T @ sq - N * wbar * wbar)


def _clamp(num, den):
    if den == 0:
        return 1.0, 1.0
    pre = float(num / den)
    return min(1.0, max(0.0, pre)), pre


def _offdiag_sum(M):
    return float(M.sum() - np.trace(M))


def estimate_lambda_diagonal(X, full_output: bool = False):
    """Optimal intensity for shrinking towards the diagonal.

    ``sum_{i!=j} var(c_ij) / sum_{i!=j} c_ij**2``, clamped to [0, 1]. A zero
    denominator means the target is already attained and gives 1.

    With ``full_output`` the pair ``(lambda, lambda_preclamp)`` is returned.
    """
    Xc = _centred(X)
    C = sample_covariance(Xc)
    lam, pre = _clamp(_offdiag_sum(covariance_variances(Xc)), _offdiag_sum(C * C))
    return (lam, pre) if full_output else lam


def _sample_alpha(G_rows):
    """Row-wise implied alpha of per-sample CLR squared deviations."""
    D = G_rows.shape[1]
    return (G_rows - G_rows.sum(axis=1, keepdims=True) / (D * (D - 1))) * D / (D - 2)


def _lu_cross_terms(Xc, target_kind, ref):
    """Exact ``cov(s_ij, tau_ij)`` for the LU targets.

    The target is linear in S, so the covariance with ``tau_ij`` is obtained
    by applying the target map to each sample's outer product.
    """
    N, k = Xc.shape
    scale = _moment_scale(N)
    if target_kind == "LU_ALR":
        padded = np.insert(Xc, ref, 0.0, axis=1)
        u = padded - padded.mean(axis=1, keepdims=True)
        a_ref = _sample_alpha(u * u)[:, ref]
        a_ref = a_ref - a_ref.mean()
        return scale * (Xc * a_ref[:, None]).T @ Xc
    # LU_CLR: tau_ij = -(alpha_i + alpha_j - sum(alpha)/D) / D
    D = k
    u = Xc - Xc.mean(axis=1, keepdims=True)
    a = _sample_alpha(u * u)
    a = a - a.mean(axis=0)
    A = a.sum(axis=1)
    B = (Xc * a).T @ Xc
    return -scale / D * (B + B.T - (Xc * A[:, None]).T @ Xc / D)


def estimate_lambda_general(X, target_kind: str, ref: int = -1,
                            exact_max_dim: int | None = None, full_output: bool = False):
    """Optimal intensity for an arbitrary target from the general formula.

    ``sum_{i!=j} [var(s_ij) - cov(s_ij, tau_ij)] / sum_{i!=j} (s_ij - tau_ij)**2``

    Parameters
    ----------
    X : ndarray
        ALR data for ``LU_ALR`` (with ``ref`` the reference position among
        the D parts), CLR data for ``LU_CLR``, any data for ``DIAGONAL``.
    exact_max_dim : int, optional
        If given and D exceeds it, the cross term is dropped (approximate
        mode). By default it is always computed exactly.

    Returns
    -------
    float, or (lambda, lambda_preclamp, approximate) with ``full_output``.
    """
    Xc = _centred(X)
    S = sample_covariance(Xc)
    N, k = Xc.shape
    var = covariance_variances(Xc)
    if target_kind == "DIAGONAL":
        T = np.diag(np.diag(S))
        D = k
    elif target_kind == "LU_ALR":
        D = k + 1
        ref = ref % D
        T = _lu_alr_values(S, ref)
    elif target_kind == "LU_CLR":
        D = k
        T = _lu_clr_values(S)
    else:
        raise ValueError(f"unsupported target kind {target_kind!r}")
    approximate = target_kind != "DIAGONAL" and exact_max_dim is not None and D > exact_max_dim
    if target_kind == "DIAGONAL" or approximate:
        cross = np.zeros_like(S)
    else:
        cross = _lu_cross_terms(Xc, target_kind, ref)
    den = _offdiag_sum((S - T) ** 2)
    if den == 0:
        warnings.warn("shrinkage target equals the sample covariance; using lambda = 1",
                      RuntimeWarning, stacklevel=2)
    lam, pre = _clamp(_offdiag_sum(var - cross), den)
    return (lam, pre, approximate) if full_output else lam


def _variance_lambda(v, X):
    v = np.asarray(v, dtype=float)
    target = np.median(v)
    return _clamp(float(np.trace(covariance_variances(X))) if v.size else 0.0,
                  float(((v - target) ** 2).sum()))


def shrink_variances(v, X, force: bool = False):
    """Shrink variances towards their median.

    Parameters
    ----------
    v : array_like
        Variances, normally ``diag(sample_covariance(X))``.
    X : ndarray
        The data the variances were computed from.
    force : bool
        Use full shrinkage (``lambda_var = 1``).

    Returns
    -------
    (ndarray, float)
        Shrunk variances and the intensity used.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != np.asarray(X).shape[1]:
        raise ShapeMismatch("need one variance per column of X")
    lam = 1.0 if force else _variance_lambda(v, X)[0]
    return lam * np.median(v) + (1.0 - lam) * v, lam


def _rescale(C, lam, variances):
    """Shrink correlations by ``lam`` and rebuild with the given variances.

    With ``variances == diag(C)`` this is exactly ``lam*diag(C) + (1-lam)*C``.
    """
    d = np.sqrt(np.diag(C))
    with np.errstate(divide="ignore", invalid="ignore"):
        R = C / np.outer(d, d)
    R[~np.isfinite(R)] = 0.0
    R *= 1.0 - lam
    np.fill_diagonal(R, 1.0)
    s = np.sqrt(variances)
    out = R * np.outer(s, s)
    return 0.5 * (out + out.T)


def shrink_to_diagonal(C, X, with_variance_shrinkage: bool = True):
    """Diagonal-target shrinkage of ``C = sample_covariance(X)``.

    Returns ``(matrix, lam, lam_pre, lam_var, lam_var_pre)``.
    """
    C = np.asarray(C, dtype=float)
    lam, pre = estimate_lambda_diagonal(X, full_output=True)
    v = np.diag(C)
    lam_var = lam_var_pre = None
    if with_variance_shrinkage:
        lam_var, lam_var_pre = _variance_lambda(v, X)
        v = lam_var * np.median(v) + (1.0 - lam_var) * v
    return _rescale(C, lam, v), lam, pre, lam_var, lam_var_pre


def _log_basis(data, kind):
    if kind == "counts":
        counts = as_counts(data)
        if np.any(counts == 0):
            raise ZeroEntry("counts contain zeros; impute them before taking logs")
        P = closure(counts)
    elif kind == "compositions":
        P = np.asarray(data, dtype=float)
        if np.any(P <= 0):
            raise ZeroEntry("compositions contain zeros; impute them before taking logs")
        P = as_composition(P)
    else:
        raise ValueError(f"unknown data kind {kind!r}")
    return np.log(P)


def shrink_basis_pipeline(data, kind: str = "compositions", output: str = "CLR",
                          ref: int = -1, with_variance_shrinkage: bool = True) -> ShrinkageEstimate:
    """Shrink the constant-size basis covariance and map it to logratios.

    The basis is ``log p`` (size ``t = 1``); its sample covariance is shrunk
    towards its diagonal and the result is transformed to the ALR or CLR
    representation.

    Parameters
    ----------
    data : ndarray
        Zero-free counts or strictly positive compositions, samples in rows.
    kind : {"compositions", "counts"}
    output : {"CLR", "ALR"}
    ref : int
        ALR reference part (ignored for CLR).
    """
    L = _log_basis(data, kind)
    C = sample_covariance(L)
    W, lam, pre, lv, lvp = shrink_to_diagonal(C, L, with_variance_shrinkage)
    omega = CovMatrix(W, "BASIS")
    output = output.upper()
    if output == "CLR":
        cov = omega_to_gamma(omega)
    elif output == "ALR":
        cov = omega_to_sigma(omega, ref)
    else:
        raise ValueError(f"unknown output representation {output!r}")
    return ShrinkageEstimate(cov, lam, pre, "DIAGONAL", lv, lvp, basis=omega)


def _lu_alr_values(S, ref):
    k = S.shape[0]
    padded = np.insert(np.insert(S, ref, 0.0, axis=0), ref, 0.0, axis=1)
    a = implied_alpha(np.diag(double_centre(padded)))
    rest = np.delete(a, ref)
    return np.full((k, k), a[ref]) + np.diag(rest)


def _lu_clr_values(G):
    a = implied_alpha(np.diag(G))
    D = a.size
    abar = a.sum() / D
    T = -(a[:, None] + a[None, :] - abar) / D
    np.fill_diagonal(T, a - (2 * a - abar) / D)
    return T


def lu_target_alr(S) -> CovMatrix:
    """LU shrinkage target for an ALR covariance.

    The LU variances implied by the CLR variances of ``S`` are used to build
    an LU ALR covariance with the same reference. LU matrices are fixed
    points. The implied variances may be non-positive for non-LU input.
    """
    if not isinstance(S, CovMatrix):
        S = CovMatrix(S, "ALR")
    elif S.kind != "ALR":
        raise RepresentationMismatch(f"expected an ALR covariance, got {S.kind}")
    return CovMatrix(_lu_alr_values(S.values, S.ref), "ALR", ref=S.ref, labels=S.labels)


def lu_target_clr(G) -> CovMatrix:
    """LU shrinkage target for a CLR covariance, built from ``diag(G)`` only."""
    if not isinstance(G, CovMatrix):
        G = CovMatrix(G, "CLR")
    elif G.kind != "CLR":
        raise RepresentationMismatch(f"expected a CLR covariance, got {G.kind}")
    return CovMatrix(_lu_clr_values(G.values), "CLR", labels=G.labels)


def shrink_logratio_direct(C: CovMatrix, X, target_kind: str, target=None,
                           with_variance_shrinkage: bool = False,
                           exact_max_dim: int | None = None) -> ShrinkageEstimate:
    """Shrink a logratio covariance directly.

    ``target_kind`` selects ``LU_ALR`` (ALR input), ``LU_CLR`` (CLR input),
    or ``DIAGONAL``/``CUSTOM`` for the naive diagonal target. ``CUSTOM``
    takes an explicit ``target`` matrix and defaults to ``diag(C)``.
    ``X`` is the data ``C`` was computed from (ALR data for ALR input, CLR
    data for CLR input).
    """
    if not isinstance(C, CovMatrix):
        raise TypeError("C must be a CovMatrix")
    target_kind = target_kind.upper()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != C.values.shape[0]:
        raise ShapeMismatch("X columns must match the covariance dimension")
    notes = {}
    if target_kind in ("LU_ALR", "LU_CLR"):
        want = "ALR" if target_kind == "LU_ALR" else "CLR"
        if C.kind != want:
            raise RepresentationMismatch(f"{target_kind} needs an {want} covariance, got {C.kind}")
        if target_kind == "LU_ALR":
            T = lu_target_alr(C).values
            alpha = implied_alpha(np.diag(sigma_to_gamma(C).values))
        else:
            T = lu_target_clr(C).values
            alpha = implied_alpha(np.diag(C.values))
        notes["target_alpha_nonpositive"] = bool(np.any(alpha <= 0))
        lam, pre, approx = estimate_lambda_general(
            X, target_kind, ref=C.ref if C.ref is not None else -1,
            exact_max_dim=exact_max_dim, full_output=True)
        out = shrink(C.values, T, lam)
        cov = CovMatrix(out, C.kind, ref=C.ref, labels=C.labels)
        return ShrinkageEstimate(cov, lam, pre, target_kind, approximate=approx, notes=notes)
    if target_kind in ("DIAGONAL", "CUSTOM"):
        if C.kind not in ("ALR", "CLR"):
            raise RepresentationMismatch("direct shrinkage needs an ALR or CLR covariance")
        if target is None:
            W, lam, pre, lv, lvp = shrink_to_diagonal(C.values, X, with_variance_shrinkage)
        else:
            T = np.asarray(target, dtype=float)
            S = C.values
            den = _offdiag_sum((S - T) ** 2)
            lam, pre = _clamp(_offdiag_sum(covariance_variances(X)), den)
            W, lv, lvp = shrink(S, T, lam), None, None
        cov = CovMatrix(W, C.kind, ref=C.ref, labels=C.labels)
        return ShrinkageEstimate(cov, lam, pre, target_kind, lv, lvp)
    raise ValueError(f"unknown target kind {target_kind!r}")


def bayes_equivalence(prior: WishartPrior, N: int, xbar, S):
    """Shrinkage intensity and target equivalent to a Normal-Wishart posterior.

    Returns ``(lam, T)`` with ``lam = (nu + 1) / (nu + N)`` and
    ``T = (V + kappa N / (kappa + N) d d^T) / (nu + 1)``, ``d = xbar - mu0``,
    so that ``(nu + N) * shrink(S, T, lam)`` is the posterior scale matrix.
    """
    S = np.asarray(S, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    k = prior.V.shape[0]
    if S.shape != (k, k) or xbar.shape != (k,):
        raise ShapeMismatch("S and xbar must match the prior dimension")
    if N < 2:
        raise TooFewSamples("need N >= 2")
    nu = prior.nu
    d = xbar - prior.mu0
    lam = (nu + 1) / (nu + N)
    T = (prior.V + prior.kappa * N / (prior.kappa + N) * np.outer(d, d)) / (nu + 1)
    return lam, T


def posterior_scale(prior: WishartPrior, N: int, xbar, S):
    """Posterior Wishart scale ``(N-1) S + V + kappa N/(kappa+N) d d^T``."""
    d = np.asarray(xbar, dtype=float) - prior.mu0
    return (N - 1) * np.asarray(S, dtype=float) + prior.V + \
        prior.kappa * N / (prior.kappa + N) * np.outer(d, d)
