"""Compositions, closure and logratio transforms.

Data are plain ``numpy`` arrays with samples in rows and parts in columns.
Reference parts are addressed with ordinary (0-based, negative allowed)
Python indices; the ALR output keeps the natural part order with the
reference column deleted.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import (
    BadReferenceIndex,
    DimensionTooSmall,
    EmptyRow,
    NonPositiveEntry,
    NotClosed,
    OverflowRisk,
)

SUM_TOL = 1e-9
EXP_LIMIT = 700.0


def _as_2d(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        return a[np.newaxis, :], True
    if a.ndim != 2:
        raise ValueError("expected a vector or an N x D matrix")
    return a, False


def _restore(a, was_1d):
    return a[0] if was_1d else a


def normalize_ref(ref: int, D: int) -> int:
    """Map a possibly negative reference index onto ``range(D)``."""
    if not isinstance(ref, (int, np.integer)) or not -D <= ref < D:
        raise BadReferenceIndex(f"reference index {ref!r} invalid for D={D}")
    return int(ref) % D


def closure(raw):
    """Divide each row by its total.

    Parameters
    ----------
    raw : array_like, shape (N, D) or (D,)
        Strictly positive values. Zeros must be imputed beforehand.

    Returns
    -------
    ndarray
        Same shape as ``raw`` with unit row sums.

    Raises
    ------
    NonPositiveEntry
        If any entry is zero or negative.
    DimensionTooSmall
        If there are fewer than three parts.

    Examples
    --------
    >>> closure([2, 2, 4])
    array([0.25, 0.25, 0.5 ])
    """
    mat, was_1d = _as_2d(raw)
    if mat.shape[1] < 3:
        raise DimensionTooSmall(f"need D >= 3 parts, got {mat.shape[1]}")
    if not np.all(np.isfinite(mat)) or np.any(mat <= 0):
        raise NonPositiveEntry("closure requires strictly positive entries; impute zeros first")
    return _restore(mat / mat.sum(axis=1, keepdims=True), was_1d)


def as_composition(P):
    """Validate a composition matrix and return it as a float array.

    Rows off unit sum by at most ``SUM_TOL`` are renormalized silently, rows
    further off raise :class:`NotClosed`.
    """
    mat, was_1d = _as_2d(P)
    if mat.shape[1] < 3:
        raise DimensionTooSmall(f"need D >= 3 parts, got {mat.shape[1]}")
    if not np.all(np.isfinite(mat)) or np.any(mat <= 0):
        raise NonPositiveEntry("compositions must be strictly positive")
    sums = mat.sum(axis=1, keepdims=True)
    if np.any(np.abs(sums - 1.0) > SUM_TOL):
        raise NotClosed("rows do not sum to 1; apply closure() first")
    return _restore(mat / sums, was_1d)


def as_counts(counts):
    """Validate a nonnegative integer count matrix (N x D, D >= 3)."""
    mat = np.asarray(counts)
    if mat.ndim != 2:
        raise ValueError("counts must be an N x D matrix")
    if mat.shape[1] < 3:
        raise DimensionTooSmall(f"need D >= 3 parts, got {mat.shape[1]}")
    if mat.shape[0] < 1:
        raise ValueError("counts must have at least one row")
    if np.any(mat < 0) or not np.all(np.isfinite(mat)) or np.any(mat != np.round(mat)):
        raise ValueError("counts must be nonnegative integers")
    if np.any(mat.sum(axis=1) <= 0):
        raise EmptyRow("every count row needs a positive total")
    return mat.astype(np.int64)


def alr(P, ref: int = -1):
    """Additive logratio transform ``log(p_j / p_ref)``.

    Returns an array with one column fewer than ``P``; the reference column
    is removed and the remaining parts keep their order.

    >>> np.round(alr([0.2, 0.2, 0.6]), 4)
    array([-1.0986, -1.0986])
    """
    mat, was_1d = _as_2d(as_composition(P))
    r = normalize_ref(ref, mat.shape[1])
    logp = np.log(mat)
    out = np.delete(logp, r, axis=1) - logp[:, [r]]
    return _restore(out, was_1d)


def alr_inverse(X, ref: int = -1):
    """Back-transform ALR coordinates to compositions.

    ``ref`` is the position the reference part takes in the output. Rows are
    shifted by their maximum before exponentiating.
    """
    mat, was_1d = _as_2d(X)
    D = mat.shape[1] + 1
    if D < 3:
        raise DimensionTooSmall(f"need D >= 3 parts, got {D}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("ALR coordinates must be finite")
    if np.any(np.abs(mat) > EXP_LIMIT):
        raise OverflowRisk(f"ALR coordinate magnitude exceeds {EXP_LIMIT}")
    r = normalize_ref(ref, D)
    full = np.insert(mat, r, 0.0, axis=1)
    full = full - full.max(axis=1, keepdims=True)
    e = np.exp(full)
    out = e / e.sum(axis=1, keepdims=True)
    if np.any(out <= 0):
        raise OverflowRisk("a part underflowed to zero; logratios are too spread out")
    return _restore(out, was_1d)


def clr(P):
    """Centred logratio transform ``log(p_j / g(p))``; rows sum to zero."""
    mat, was_1d = _as_2d(as_composition(P))
    return _restore(centre_rows(np.log(mat)), was_1d)


def centre_rows(L):
    """Subtract each row's mean (CLR of an already-logged basis)."""
    L = np.asarray(L, dtype=float)
    return L - L.mean(axis=-1, keepdims=True)


def read_matrix(path, header: bool = False, delimiter: str | None = None):
    """Read a numeric CSV/TSV file.

    Rows are samples and columns parts. Lines starting with ``#`` are
    skipped. Returns ``(values, labels)`` where ``labels`` is ``None`` unless
    ``header`` is set.
    """
    path = Path(path)
    if delimiter is None:
        delimiter = "\t" if path.suffix.lower() in {".tsv", ".tab"} else ","
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and not r[0].startswith("#")]
    labels = None
    if header:
        labels, rows = [s.strip() for s in rows[0]], rows[1:]
    values = np.array([[float(v) for v in r] for r in rows], dtype=float)
    return values, labels


def write_matrix(path, values, labels=None, comment: str | None = None, fmt: str = "{!r}"):
    """Write a matrix as CSV, optionally preceded by a ``# comment`` line."""
    values = np.atleast_2d(np.asarray(values))
    with Path(path).open("w", newline="") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        if labels is not None:
            w.writerow(labels)
        for row in values:
            w.writerow([fmt.format(v.item()) for v in row])
