import numpy as np
import pytest

from bolasso.lasso import LassoProblem


def random_problem(rng, n=None, p=None):
    """Correlated Gaussian design with a sparse signal plus noise."""
    n = int(rng.integers(20, 201)) if n is None else n
    p = int(rng.integers(2, 21)) if p is None else p
    # random correlation: Wishart draw blended with the identity
    G = rng.standard_normal((p, p))
    C = rng.uniform(0, 0.9) * G @ G.T / p + np.eye(p) * 0.1
    X = rng.standard_normal((n, p)) @ np.linalg.cholesky(C).T * rng.uniform(0.5, 3)
    w = rng.standard_normal(p) * (rng.random(p) < 0.5)
    y = X @ w + rng.uniform(0.1, 1.0) * rng.standard_normal(n)
    return LassoProblem(X, y)


def orthonormal_problem(rng, n=40, p=5):
    """Design with X^T X / n = I exactly (up to QR rounding)."""
    Qmat, _ = np.linalg.qr(rng.standard_normal((n, p)))
    X = Qmat * np.sqrt(n)
    y = rng.standard_normal(n) * 2
    return LassoProblem(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"ACCEPTANCE {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
