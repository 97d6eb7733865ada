import numpy as np
import pytest


def random_spd(rng, k, jitter=0.5):
    A = rng.normal(size=(k, k + 2))
    return A @ A.T / k + jitter * np.eye(k)


def naive_cov(X):
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    m = [sum(X[r, i] for r in range(n)) / n for i in range(k)]
    out = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            out[i, j] = sum((X[r, i] - m[i]) * (X[r, j] - m[j]) for r in range(n)) / (n - 1)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
