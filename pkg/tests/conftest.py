import numpy as np
import pytest

from hdsnr.model import ModelParams, RegressionSample, simulate_sample, GaussianIsotropic

# acceptance results collected as (criterion, passed, detail) and printed at the end of the run
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def isotropic_sample(n, d, sigma2=1.0, tau2=1.0, seed=0):
    """Gaussian isotropic sample with a unit-direction beta scaled to ``tau2``."""
    beta = np.zeros(d)
    beta[0] = np.sqrt(tau2)
    return simulate_sample(ModelParams(beta, sigma2), GaussianIsotropic(), n, seed)
