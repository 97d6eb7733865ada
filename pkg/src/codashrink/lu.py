"""Closed forms for logratio-uncorrelated (LU) compositions.

An LU composition is what the closure makes of a basis with uncorrelated log
components; its whole covariance structure is fixed by the vector ``alpha``
of basis log-variances. Everything here is a function of ``alpha`` alone.
"""

from __future__ import annotations

import numpy as np

from .composition import normalize_ref
from .covariance import CovMatrix
from .errors import DimensionTooSmall, NonPositiveAlpha, PairRemoved


def as_alpha(alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1:
        raise ValueError("alpha must be a vector")
    if a.size < 3:
        raise DimensionTooSmall(f"need D >= 3 parts, got {a.size}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise NonPositiveAlpha("alpha entries must be positive and finite")
    return a


def lu_sigma(alpha, ref: int = -1) -> CovMatrix:
    """ALR covariance of an LU composition.

    Diagonal ``alpha_i + alpha_ref``, off-diagonal ``alpha_ref``.

    >>> lu_sigma([1, 1, 1]).values
    array([[2., 1.],
           [1., 2.]])
    """
    a = as_alpha(alpha)
    r = normalize_ref(ref, a.size)
    rest = np.delete(a, r)
    S = np.full((rest.size, rest.size), a[r]) + np.diag(rest)
    return CovMatrix(S, "ALR", ref=r)


def lu_gamma(alpha) -> CovMatrix:
    """CLR covariance of an LU composition."""
    a = as_alpha(alpha)
    D = a.size
    abar = a.sum() / D
    G = -(a[:, None] + a[None, :] - abar) / D
    np.fill_diagonal(G, a - (2 * a - abar) / D)
    return CovMatrix(G, "CLR")


def implied_alpha(gamma_diag) -> np.ndarray:
    """Invert the LU relation between ``alpha`` and the CLR variances.

    For an LU composition ``g_ii = alpha_i (1 - 2/D) + sum(alpha) / D**2``;
    solving for ``alpha`` gives a linear map of ``diag(Gamma)``. The result
    may contain non-positive entries when the input is not LU.
    """
    g = np.asarray(gamma_diag, dtype=float)
    D = g.size
    if D < 3:
        raise DimensionTooSmall(f"need D >= 3 parts, got {D}")
    return (g - g.sum() / (D * (D - 1))) * D / (D - 2)


def lu_determinant(alpha) -> float:
    """``|Sigma| = sum_i prod_{k != i} alpha_k``.

    Evaluated as ``prod(alpha) * sum(1 / alpha)``, which is the same
    quantity.
    """
    a = as_alpha(alpha)
    return float(np.prod(a) * np.sum(1.0 / a))


def lu_determinant_products(alpha) -> float:
    """Sum of leave-one-out products, evaluated term by term."""
    a = as_alpha(alpha)
    # exclusive prefix/suffix products avoid division
    pre = np.concatenate(([1.0], np.cumprod(a[:-1])))
    suf = np.concatenate((np.cumprod(a[::-1][:-1])[::-1], [1.0]))
    return float(np.sum(pre * suf))


def lu_sigma_inverse(alpha, ref: int = -1) -> np.ndarray:
    """Closed-form inverse of :func:`lu_sigma`.

    With ``s = sum_k 1/alpha_k`` the entries are
    ``(s - 1/alpha_i) / (alpha_i s)`` on the diagonal and
    ``-1 / (alpha_i alpha_j s)`` off it; this is the leave-one-out-product
    expression with ``prod(alpha)`` cancelled.
    """
    a = as_alpha(alpha)
    r = normalize_ref(ref, a.size)
    inv = 1.0 / a
    s = inv.sum()
    rest = np.delete(inv, r)
    Q = -np.outer(rest, rest) / s
    np.fill_diagonal(Q, rest * (s - rest) / s)
    return Q


def _lu_pcor(inv, s):
    num = np.sqrt(np.outer(inv, inv))
    den = np.sqrt(np.outer(s - inv, s - inv))
    r = num / den
    np.fill_diagonal(r, 1.0)
    return r


def lu_partial_correlation(alpha, ref: int = -1) -> np.ndarray:
    """Closure-induced partial correlations of the non-reference parts.

    ``r_ij = sqrt(a_i a_j / ((s - a_i)(s - a_j)))`` with ``a = 1/alpha`` and
    ``s = sum(a)``. All off-diagonal entries are positive.
    """
    a = as_alpha(alpha)
    r = normalize_ref(ref, a.size)
    inv = 1.0 / a
    return np.delete(np.delete(_lu_pcor(inv, inv.sum()), r, axis=0), r, axis=1)


def lu_partial_correlation_full(alpha) -> np.ndarray:
    """D x D closure-induced partial correlations for every pair of parts.

    Partial correlations do not depend on the ALR reference, so the pairs
    involving any given part are those of the system referenced elsewhere.
    """
    a = as_alpha(alpha)
    inv = 1.0 / a
    return _lu_pcor(inv, inv.sum())


def strongest_pair(alpha) -> tuple[int, int]:
    """Pair with the largest closure-induced partial correlation.

    Ties go to the lexicographically smallest index pair.
    """
    r = lu_partial_correlation_full(alpha)
    iu, ju = np.triu_indices(r.shape[0], k=1)
    k = int(np.argmax(r[iu, ju]))  # argmax returns the first maximum
    return int(iu[k]), int(ju[k])


def removal_order(alpha, pair, order: str = "smallest", seed: int | None = None) -> list[int]:
    """Sequence in which parts other than ``pair`` are eliminated.

    ``"smallest"`` drops the part with the smallest ``1/alpha`` (largest
    ``alpha``) first, ties by index; ``"random"`` uses a seeded permutation.
    """
    a = as_alpha(alpha)
    i, j = pair
    others = [k for k in range(a.size) if k not in (i, j)]
    if order == "smallest":
        return sorted(others, key=lambda k: (1.0 / a[k], k))
    if order == "random":
        rng = np.random.default_rng(seed)
        return [others[k] for k in rng.permutation(len(others))]
    raise ValueError(f"unknown removal order {order!r}")


def dilution_experiment(alpha, pair, order="smallest", seed: int | None = None):
    """Partial correlation of a fixed pair as other parts are removed.

    Parameters
    ----------
    alpha : array_like
        LU variance vector of the full composition.
    pair : tuple of int
        0-based indices of the two parts whose partial correlation is tracked.
    order : {"smallest", "random"} or sequence of int
        Removal sequence, either by rule or given explicitly.

    Returns
    -------
    list of (int, float)
        ``(D, r_pair)`` for every size from 3 up to the full ``D``, in
        ascending ``D``.
    """
    a = as_alpha(alpha)
    i, j = (int(k) for k in pair)
    D = a.size
    if i == j or not (0 <= i < D and 0 <= j < D):
        raise ValueError(f"invalid pair {pair!r}")
    if isinstance(order, str):
        seq = removal_order(a, (i, j), order, seed)
    else:
        seq = [int(k) for k in order]
        if i in seq or j in seq:
            raise PairRemoved("the tracked pair cannot be removed")
        if sorted(seq) != sorted(set(range(D)) - {i, j}):
            raise ValueError("removal order must list every other part exactly once")
    inv = 1.0 / a
    # a part removed at step t is still present for all sizes larger than D - t
    s = inv[i] + inv[j]
    series = []
    remaining = list(reversed(seq))
    for k in remaining:
        s += inv[k]
        num = np.sqrt(inv[i] * inv[j])
        den = np.sqrt((s - inv[i]) * (s - inv[j]))
        series.append(float(num / den))
    return [(3 + n, r) for n, r in enumerate(series)]
