import numpy as np
import pytest

from varmatch.covdata import CovSequence
from varmatch.generator import GenConfig, random_problem, random_schur

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record():
    def _record(criterion, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        print(ACCEPTANCE_LINES[-1])
    return _record


def schur_poly(seed, m, n, margin=0.9):
    return random_schur(GenConfig(seed=seed, m=m, n=n, target_margin=margin))


def random_data(seed, m, n):
    """PD covariance data from a random ARMA model."""
    return random_problem(GenConfig(seed=seed, m=m, n=n, min_detPn=0.0)).data


def random_cov(seed, m, n):
    """Arbitrary (not necessarily PD) data with symmetric C_0."""
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(n + 1, m, m))
    c[0] = c[0] @ c[0].T + np.eye(m)
    return CovSequence(c)
