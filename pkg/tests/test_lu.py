import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codashrink.composition import alr
from codashrink.covariance import omega_to_sigma, partial_correlation, sample_covariance
from codashrink.errors import NonPositiveAlpha, PairRemoved
from codashrink.lu import (
    dilution_experiment,
    implied_alpha,
    lu_determinant,
    lu_determinant_products,
    lu_gamma,
    lu_partial_correlation,
    lu_partial_correlation_full,
    lu_sigma,
    lu_sigma_inverse,
    removal_order,
    strongest_pair,
)
from codashrink.simulation import sample_logistic_normal

alphas = st.lists(st.floats(0.05, 20.0), min_size=3, max_size=12).map(np.array)


def product_form_inverse(alpha):
    """Leave-one-out product expression, written out term by term."""
    D = len(alpha)
    def prod_except(*skip):
        return math.prod(alpha[k] for k in range(D) if k not in skip)
    det = sum(prod_except(k) for k in range(D))
    out = np.empty((D - 1, D - 1))
    for i in range(D - 1):
        for j in range(D - 1):
            if i == j:
                out[i, j] = sum(prod_except(k, i) for k in range(D) if k != i) / det
            else:
                out[i, j] = -prod_except(i, j) / det
    return out


def test_lu_sigma_examples():
    np.testing.assert_array_equal(lu_sigma([1, 1, 1]).values, [[2, 1], [1, 2]])
    S = lu_sigma([1, 2, 3, 4]).values
    np.testing.assert_array_equal(np.diag(S), [5, 6, 7])
    assert np.all(S[~np.eye(3, dtype=bool)] == 4)
    with pytest.raises(NonPositiveAlpha):
        lu_sigma([1, 0, 1])


def test_lu_gamma_example():
    G = lu_gamma([1, 1, 1]).values
    np.testing.assert_allclose(np.diag(G), 2 / 3)
    np.testing.assert_allclose(G[0, 1], -1 / 3)
    np.testing.assert_allclose(lu_gamma([1, 2, 3, 4]).values.sum(axis=1), 0.0, atol=1e-12)


def test_determinant_examples():
    assert lu_determinant([1, 1, 1]) == pytest.approx(3)
    assert lu_determinant([1, 2, 3]) == pytest.approx(11)
    assert lu_determinant_products([1, 2, 3]) == pytest.approx(11)
    assert np.linalg.det(lu_sigma([1, 2, 3]).values) == pytest.approx(11)


def test_inverse_examples():
    np.testing.assert_allclose(lu_sigma_inverse([1, 1, 1]), np.array([[2, -1], [-1, 2]]) / 3)
    D = 200
    np.testing.assert_allclose(np.diag(lu_sigma_inverse(np.ones(D))), (D - 1) / D)


def test_partial_correlation_examples():
    for D in (3, 4, 7):
        R = lu_partial_correlation(np.ones(D))
        np.testing.assert_allclose(R[~np.eye(D - 1, dtype=bool)], 1 / (D - 1))
    assert lu_partial_correlation([1, 2, 3])[0, 1] == pytest.approx(math.sqrt(0.45))
    assert lu_partial_correlation([1, 2, 3])[0, 1] == pytest.approx(0.6708, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(alphas)
def test_inverse_matches_product_form(a):
    np.testing.assert_allclose(lu_sigma_inverse(a), product_form_inverse(a), rtol=1e-9, atol=1e-12)
    S = lu_sigma(a).values
    assert np.abs(S @ lu_sigma_inverse(a) - np.eye(a.size - 1)).max() < 1e-9


@settings(max_examples=50, deadline=None)
@given(alphas)
def test_determinant_forms(a):
    assert lu_determinant(a) == pytest.approx(lu_determinant_products(a), rel=1e-12)
    assert lu_determinant(a) == pytest.approx(np.linalg.det(lu_sigma(a).values), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(alphas, st.data())
def test_pcor_closed_form_vs_numeric(a, data):
    ref = data.draw(st.integers(0, a.size - 1))
    R = partial_correlation(lu_sigma(a, ref))
    np.testing.assert_allclose(lu_partial_correlation(a, ref), R, atol=1e-10)
    full = lu_partial_correlation_full(a)
    keep = [k for k in range(a.size) if k != ref]
    np.testing.assert_allclose(full[np.ix_(keep, keep)], R, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(alphas)
def test_lu_maps_agree(a):
    np.testing.assert_allclose(omega_to_sigma(np.diag(a)).values, lu_sigma(a).values, atol=1e-12)
    np.testing.assert_allclose(implied_alpha(np.diag(lu_gamma(a).values)), a, rtol=1e-9)


def test_pcor_decreases_as_other_part_gains_weight():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    prev = lu_partial_correlation(a)[0, 1]
    for scale in (0.5, 0.25, 0.1):
        b = a.copy()
        b[3] *= scale
        cur = lu_partial_correlation(b)[0, 1]
        assert cur < prev
        prev = cur


def test_empirical_lu_condition():
    a = np.array([0.5, 1.0, 1.5, 2.0, 0.8])
    P = sample_logistic_normal(np.zeros(4), lu_sigma(a), 100_000, seed=11)
    logp = np.log(P)
    for i, j, k, l in itertools.permutations(range(5), 4):
        c = np.cov(logp[:, i] - logp[:, k], logp[:, j] - logp[:, l])[0, 1]
        assert abs(c) < 0.05


def test_strongest_pair_ties():
    assert strongest_pair(np.ones(5)) == (0, 1)
    assert strongest_pair([5.0, 1.0, 3.0, 1.0]) == (1, 3)


def test_dilution_equal_alpha():
    series = dilution_experiment(np.ones(11), (0, 1))
    assert [d for d, _ in series] == list(range(3, 12))
    assert [r for _, r in series] == [1 / (D - 1) for D in range(3, 12)]
    other = dilution_experiment(np.ones(11), (0, 1), order="random", seed=3)
    assert other == series


def test_dilution_matches_closed_form_on_subsets(rng):
    a = rng.uniform(0.2, 3.0, size=9)
    order = removal_order(a, (2, 5))
    series = dict(dilution_experiment(a, (2, 5)))
    for n_removed in range(len(order)):
        keep = sorted(set(range(9)) - set(order[:n_removed]))
        sub = a[keep]
        ii, jj = keep.index(2), keep.index(5)
        assert series[len(keep)] == pytest.approx(lu_partial_correlation_full(sub)[ii, jj],
                                                  rel=1e-12)


def test_removal_order_smallest_first():
    a = np.array([1.0, 1.0, 5.0, 2.0, 10.0])
    assert removal_order(a, (0, 1)) == [4, 2, 3]


def test_pair_removed():
    with pytest.raises(PairRemoved):
        dilution_experiment(np.ones(5), (0, 1), order=[1, 2, 3])
