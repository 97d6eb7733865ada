import math

import numpy as np
import pytest
from scipy import integrate

from codashrink.composition import alr, alr_inverse
from codashrink.covariance import CovMatrix, sample_covariance
from codashrink.errors import NotPositiveDefinite
from codashrink.simulation import (
    SyntheticTruth,
    logistic_normal_logdensity,
    sample_logistic_normal,
    stream,
    synthetic_count_dataset,
)

from conftest import random_spd


def test_streams_are_keyed():
    a = stream(1, 2, 3).random(4)
    np.testing.assert_array_equal(a, stream(1, 2, 3).random(4))
    assert not np.array_equal(a, stream(1, 3, 2).random(4))


def test_sampling_is_deterministic(rng):
    S = random_spd(rng, 4)
    a = sample_logistic_normal(np.zeros(4), S, 20, seed=9)
    b = sample_logistic_normal(np.zeros(4), S, 20, seed=9)
    assert a.tobytes() == b.tobytes()


def test_concentrated_limit():
    mu = np.array([0.3, -1.0, 2.0])
    P = sample_logistic_normal(mu, 1e-14 * np.eye(3), 5, seed=0)
    np.testing.assert_allclose(P, np.tile(alr_inverse(mu), (5, 1)), rtol=1e-6)


def test_law_of_large_numbers(rng):
    S = random_spd(rng, 4)
    mu = rng.normal(size=4)
    P = sample_logistic_normal(mu, S, 100_000, seed=1)
    X = alr(P)
    assert np.linalg.norm(sample_covariance(X) - S) / np.linalg.norm(S) < 0.02
    np.testing.assert_allclose(X.mean(axis=0), mu, atol=0.03)


def test_reference_from_covmatrix(rng):
    S = CovMatrix(random_spd(rng, 3), "ALR", ref=1)
    P = sample_logistic_normal(np.zeros(3), S, 50_000, seed=2)
    assert np.linalg.norm(sample_covariance(alr(P, 1)) - S.values) / np.linalg.norm(S.values) < 0.03


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        sample_logistic_normal(np.zeros(2), [[1.0, 2.0], [2.0, 1.0]], 3, seed=0)


def test_logdensity_example():
    val = logistic_normal_logdensity(np.full(3, 1 / 3), np.zeros(2), np.eye(2))
    assert val == pytest.approx(-math.log(2 * math.pi) + 3 * math.log(3), rel=1e-12)


def test_logdensity_integrates_to_one():
    mu, S = np.array([0.2, -0.1]), np.array([[0.5, 0.1], [0.1, 0.4]])

    def f(p2, p1):
        p3 = 1.0 - p1 - p2
        if p3 <= 0 or p1 <= 0 or p2 <= 0:
            return 0.0
        return math.exp(logistic_normal_logdensity(np.array([p1, p2, p3]), mu, S))

    total, _ = integrate.dblquad(f, 0.0, 1.0, 0.0, lambda p1: 1.0 - p1, epsabs=1e-6)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_logdensity_depends_on_logratios_plus_jacobian(rng):
    mu, S = rng.normal(size=3), random_spd(rng, 3)
    P = alr_inverse(rng.normal(size=(5, 3)))
    x = alr(P)
    d = x - mu
    quad = np.einsum("ni,ij,nj->n", d, np.linalg.inv(S), d)
    expected = (-0.5 * quad - 0.5 * np.log(np.linalg.det(2 * np.pi * S))
                - np.log(P).sum(axis=1))
    np.testing.assert_allclose(logistic_normal_logdensity(P, mu, S), expected, rtol=1e-10)


def test_synthetic_truth_draws_valid_subsets():
    truth = SyntheticTruth(pool_size=50, seed=3)
    mu, S = truth.draw(10, stream(3, 0))
    assert mu.shape == (9,) and S.kind == "ALR" and S.D == 10
    assert np.all(np.linalg.eigvalsh(S.values) > 0)


def test_synthetic_count_dataset():
    counts = synthetic_count_dataset(12, 30, 20, depth=300, seed=2)
    assert counts.shape == (50, 12)
    assert np.all(counts[:30] > 0)
    assert np.all(np.any(counts[30:] == 0, axis=1))
    again = synthetic_count_dataset(12, 30, 20, depth=300, seed=2)
    np.testing.assert_array_equal(counts, again)
