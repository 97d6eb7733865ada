"""Zero handling for count data before logs are taken.

Both methods return strictly positive frequencies with unit row sums.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .composition import as_counts
from .errors import DeltaOutOfRange, RowTotalTooSmall


@dataclass(frozen=True)
class ImputedFrequencies:
    values: np.ndarray
    method: str
    params: dict = field(default_factory=dict)


def _czm_row(row, delta_fraction):
    n = row.sum()
    zeros = row == 0
    z = int(zeros.sum())
    freq = row / n
    if z == 0:
        return freq
    delta = delta_fraction / (n + 1)
    if z * delta >= 1.0:
        # too many zeros for the per-row detection limit; keeps the nonzero mass positive
        delta = delta_fraction / (n + z)
    return np.where(zeros, delta, freq * (1.0 - z * delta))


def impute_czm(counts, delta_fraction: float = 0.65) -> ImputedFrequencies:
    """Count zero multiplicative replacement.

    In a row with total ``n`` and ``z`` zeros, each zero becomes
    ``delta = delta_fraction / (n + 1)`` and every nonzero frequency is
    scaled by ``1 - z * delta`` so the row still sums to one. Rows without
    zeros are plain frequencies.

    Examples
    --------
    >>> np.round(impute_czm([[0, 1, 1]]).values, 4)
    array([[0.2167, 0.3917, 0.3917]])
    """
    if not 0.0 < delta_fraction < 1.0:
        raise DeltaOutOfRange(f"delta_fraction={delta_fraction} not in (0, 1)")
    m = as_counts(counts).astype(float)
    out = np.vstack([_czm_row(row, delta_fraction) for row in m])
    return ImputedFrequencies(out, "CZM", {"delta_fraction": delta_fraction})


def freq_shrink_lambda(row) -> float:
    """James-Stein intensity for shrinking one row of counts to uniform."""
    row = np.asarray(row, dtype=float)
    n = row.sum()
    theta = row / n
    target = 1.0 / row.size
    den = (n - 1) * np.sum((target - theta) ** 2)
    if den == 0:
        return 1.0
    return float(min(1.0, max(0.0, (1.0 - np.sum(theta ** 2)) / den)))


def impute_freq_shrink(counts, delta_fraction: float = 0.65) -> ImputedFrequencies:
    """Frequency shrinkage towards the uniform distribution, row by row.

    Rows whose intensity is 0 but that still contain zeros fall back to
    :func:`impute_czm` with ``delta_fraction`` (a warning is issued).
    """
    m = as_counts(counts).astype(float)
    if np.any(m.sum(axis=1) < 2):
        raise RowTotalTooSmall("frequency shrinkage needs row totals >= 2")
    D = m.shape[1]
    out = np.empty_like(m)
    lambdas = np.empty(m.shape[0])
    fallback = []
    for i, row in enumerate(m):
        lam = freq_shrink_lambda(row)
        lambdas[i] = lam
        theta = row / row.sum()
        if lam == 0 and np.any(row == 0):
            fallback.append(i)
            out[i] = _czm_row(row, delta_fraction)
        else:
            out[i] = lam / D + (1.0 - lam) * theta
    if fallback:
        warnings.warn(f"{len(fallback)} row(s) had zero shrinkage intensity; used CZM instead",
                      RuntimeWarning, stacklevel=2)
    return ImputedFrequencies(out, "FREQ_SHRINK", {"lambdas": lambdas, "czm_rows": fallback})


def impute(counts, method: str, delta_fraction: float = 0.65) -> ImputedFrequencies:
    """Dispatch on ``method`` (``"czm"`` or ``"freq-shrink"``)."""
    key = method.lower().replace("_", "-")
    if key == "czm":
        return impute_czm(counts, delta_fraction)
    if key in ("freq-shrink", "freq-shrinkage"):
        return impute_freq_shrink(counts, delta_fraction)
    raise ValueError(f"unknown imputation method {method!r}")
