import numpy as np
import pytest

from renyichaos.model import ModelParams


@pytest.fixture
def quad3():
    """lam = 1, N = 3, d = 1: the smallest model with hand-checkable closed forms."""
    return ModelParams(d=1, N=3, lam=1.0)


def dense_stationary_cov(lam: float, N: int, d: int, alpha: float = 1.0) -> np.ndarray:
    """Covariance of the N-particle Gibbs measure by dense inversion of its precision."""
    C = N * np.eye(N) - np.ones((N, N))
    prec = alpha * np.eye(N * d) + lam / (N - 1) * np.kron(C, np.eye(d))
    return np.linalg.inv(prec)


def dense_renyi(S1: np.ndarray, S2: np.ndarray, q: float) -> float:
    """Renyi divergence straight from log-determinants."""
    tilt = q * np.linalg.inv(S1) + (1 - q) * np.linalg.inv(S2)
    if np.linalg.eigvalsh(tilt)[0] <= 0:
        return np.inf
    ld = lambda M: np.linalg.slogdet(M)[1]
    return (-q * ld(S1) - (1 - q) * ld(S2) - ld(tilt)) / (2 * (q - 1))


def dense_kl(S1: np.ndarray, S2: np.ndarray) -> float:
    m = S1.shape[0]
    M = np.linalg.solve(S2, S1)
    return 0.5 * (np.trace(M) - m - np.linalg.slogdet(M)[1])


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, summary: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {summary}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
