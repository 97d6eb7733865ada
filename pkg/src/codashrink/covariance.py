"""Logratio and basis covariance matrices and partial correlations.

Three representations of the covariance structure of a composition with D
parts are handled:

* ``ALR``   -- (D-1) x (D-1) covariance of ``log(p_j / p_ref)``,
* ``CLR``   -- D x D covariance of ``log(p_j / g(p))`` (rank D-1),
* ``BASIS`` -- D x D covariance of the logged basis ``log m``.

The conversion functions are the elementwise transformations between them.
Maps towards the logratio side are double centerings and lose the basis-size
information; the way back to a basis needs the basis itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .composition import as_composition, centre_rows, normalize_ref, read_matrix, write_matrix
from .errors import (
    BadReferenceIndex,
    RepresentationMismatch,
    ShapeMismatch,
    SingularCovariance,
    TooFewSamples,
)

KINDS = ("ALR", "CLR", "BASIS")
SYM_TOL = 1e-10
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """A symmetric matrix tagged with its representation.

    ``ref`` is the 0-based position of the ALR reference among the D parts
    and is only meaningful for ``kind == "ALR"``.
    """

    values: np.ndarray
    kind: str
    ref: int | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ShapeMismatch("covariance must be a square matrix")
        if self.kind not in KINDS:
            raise ValueError(f"unknown representation {self.kind!r}")
        scale = max(1.0, float(np.abs(v).max(initial=0.0)))
        if np.abs(v - v.T).max(initial=0.0) > SYM_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        v = 0.5 * (v + v.T)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.kind == "ALR":
            ref = -1 if self.ref is None else self.ref
            object.__setattr__(self, "ref", normalize_ref(ref, v.shape[0] + 1))
        else:
            object.__setattr__(self, "ref", None)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.D:
                raise ShapeMismatch("need one label per part")

    @property
    def D(self) -> int:
        """Number of parts of the underlying composition."""
        k = self.values.shape[0]
        return k + 1 if self.kind == "ALR" else k

    def __repr__(self):
        extra = f", ref={self.ref}" if self.kind == "ALR" else ""
        return f"CovMatrix({self.kind}{extra}, D={self.D})"


def _cov(C, kind: str, ref: int | None = None) -> CovMatrix:
    """Coerce ``C`` to a CovMatrix of the given kind."""
    if isinstance(C, CovMatrix):
        if C.kind != kind:
            raise RepresentationMismatch(f"expected a {kind} covariance, got {C.kind}")
        return C
    return CovMatrix(np.asarray(C, dtype=float), kind, ref=ref)


def _sym(a):
    return 0.5 * (a + a.T)


def sample_covariance(X):
    """Unbiased sample covariance (divisor N-1) of the columns of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be an N x k matrix")
    N = X.shape[0]
    if N < 2:
        raise TooFewSamples("sample covariance needs N >= 2")
    Xc = X - X.mean(axis=0)
    return _sym(Xc.T @ Xc) / (N - 1)


def double_centre(M):
    """``m_ij - mean_i - mean_j + grand mean`` (the Table-1 centering)."""
    M = np.asarray(M, dtype=float)
    row = M.mean(axis=1, keepdims=True)
    col = M.mean(axis=0, keepdims=True)
    return _sym(M - row - col + M.mean())


def _reference_contrast(M, r):
    """``m_ij - m_ir - m_rj + m_rr`` with row and column ``r`` removed."""
    out = M - M[:, [r]] - M[[r], :] + M[r, r]
    return _sym(np.delete(np.delete(out, r, axis=0), r, axis=1))


def sigma_to_gamma(S, ref: int | None = None) -> CovMatrix:
    """ALR covariance to CLR covariance.

    The ALR matrix is padded with a zero row and column at the reference
    position and then double-centred.
    """
    S = _cov(S, "ALR", ref)
    r = S.ref
    padded = np.insert(np.insert(S.values, r, 0.0, axis=0), r, 0.0, axis=1)
    return CovMatrix(double_centre(padded), "CLR", labels=S.labels)


def gamma_to_sigma(G, ref: int = -1) -> CovMatrix:
    """CLR covariance to the ALR covariance relative to part ``ref``."""
    G = _cov(G, "CLR")
    r = normalize_ref(ref, G.D)
    return CovMatrix(_reference_contrast(G.values, r), "ALR", ref=r, labels=G.labels)


def omega_to_sigma(W, ref: int = -1) -> CovMatrix:
    """Basis covariance to the ALR covariance relative to part ``ref``."""
    W = _cov(W, "BASIS")
    r = normalize_ref(ref, W.D)
    return CovMatrix(_reference_contrast(W.values, r), "ALR", ref=r, labels=W.labels)


def omega_to_gamma(W) -> CovMatrix:
    """Basis covariance to CLR covariance."""
    W = _cov(W, "BASIS")
    return CovMatrix(double_centre(W.values), "CLR", labels=W.labels)


def basis_offsets(log_basis, P):
    """Per-part offsets ``beta`` linking CLR and basis covariance.

    ``beta_j = cov(clr_j(p), log g(m)) + var(log g(m)) / 2`` so that
    ``omega_ij = gamma_ij + beta_i + beta_j``.
    """
    log_basis = np.asarray(log_basis, dtype=float)
    P = as_composition(P)
    if log_basis.shape != P.shape:
        raise ShapeMismatch(f"basis shape {log_basis.shape} != composition shape {P.shape}")
    if P.shape[0] < 2:
        raise TooFewSamples("need N >= 2 samples")
    y = centre_rows(np.log(P))
    lg = log_basis.mean(axis=1)
    yc = y - y.mean(axis=0)
    lgc = lg - lg.mean()
    n1 = P.shape[0] - 1
    return yc.T @ lgc / n1 + 0.5 * (lgc @ lgc) / n1


def logratio_to_omega(C, log_basis, P) -> CovMatrix:
    """Recover the basis covariance from a logratio covariance and a basis.

    Parameters
    ----------
    C : CovMatrix
        CLR or ALR covariance of the compositions.
    log_basis : ndarray, shape (N, D)
        Logarithms of the basis ``m = t p`` for each sample.
    P : ndarray, shape (N, D)
        The compositions themselves.
    """
    if isinstance(C, CovMatrix) and C.kind == "ALR":
        C = sigma_to_gamma(C)
    G = _cov(C, "CLR")
    beta = basis_offsets(log_basis, P)
    if beta.shape[0] != G.D:
        raise ShapeMismatch("basis has a different number of parts than the covariance")
    return CovMatrix(G.values + beta[:, None] + beta[None, :], "BASIS", labels=G.labels)


def pseudoinverse(M, rcond: float = 1e-12):
    """Moore-Penrose inverse of a symmetric matrix via ``eigh``.

    Eigenvalues with magnitude at most ``k * max|eigenvalue| * rcond`` are
    treated as zero.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeMismatch("pseudoinverse needs a square matrix")
    k = M.shape[0]
    w, V = np.linalg.eigh(_sym(M))
    if w.size == 0 or np.abs(w).max() == 0:
        return np.zeros_like(M)
    keep = np.abs(w) > k * np.abs(w).max() * rcond
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    return _sym((V * inv_w) @ V.T)


def precision_to_partial_correlation(prec):
    """``r_ij = -q_ij / sqrt(q_ii q_jj)`` with the diagonal fixed at 1."""
    prec = np.asarray(prec, dtype=float)
    d = np.sqrt(np.abs(np.diag(prec)))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = -prec / np.outer(d, d)
    r[~np.isfinite(r)] = 0.0
    r = np.clip(_sym(r), -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return r


def _checked_inverse(M):
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        raise SingularCovariance(
            f"condition number {cond:.3g} too large; shrink the covariance first")
    return _sym(np.linalg.solve(M, np.eye(M.shape[0])))


def partial_correlation(C) -> np.ndarray:
    """Logratio partial correlations.

    An ALR covariance gives the (D-1) x (D-1) matrix of the non-reference
    parts via an ordinary inverse. A CLR covariance gives the full D x D
    matrix via its pseudoinverse. A BASIS covariance (or a bare array) is
    inverted directly.

    Raises
    ------
    SingularCovariance
        If an ALR/BASIS matrix has condition number of 1e12 or more.
    """
    if isinstance(C, CovMatrix) and C.kind == "CLR":
        return precision_to_partial_correlation(pseudoinverse(C.values))
    values = C.values if isinstance(C, CovMatrix) else np.asarray(C, dtype=float)
    return precision_to_partial_correlation(_checked_inverse(values))


def write_cov(path, C: CovMatrix):
    """Write a covariance to CSV with a ``# repr=...`` header line.

    The ALR reference is written 1-based, as in the command line interface.
    """
    meta = f"repr={C.kind}" + (f" ref={C.ref + 1}" if C.kind == "ALR" else "")
    write_matrix(path, C.values, labels=None, comment=meta)


def read_cov(path) -> CovMatrix:
    """Read a covariance written by :func:`write_cov`."""
    with Path(path).open() as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise ValueError(f"{path}: missing '# repr=' header line")
    meta = dict(tok.split("=", 1) for tok in first[1:].split() if "=" in tok)
    kind = meta.get("repr", "").upper()
    if kind not in KINDS:
        raise ValueError(f"{path}: unknown representation {kind!r}")
    values, _ = read_matrix(path)
    ref = None
    if kind == "ALR":
        if "ref" not in meta:
            raise BadReferenceIndex(f"{path}: ALR header lacks ref=")
        ref = int(meta["ref"]) - 1
        if not 0 <= ref <= values.shape[0]:
            raise BadReferenceIndex(f"{path}: ref={meta['ref']} out of range")
    return CovMatrix(values, kind, ref=ref)
