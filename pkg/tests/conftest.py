import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from basketae import BasketModel, ConstantJump, LocalVolFn, NormalJump  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run long table reproductions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def basket(alpha=0.2, beta=1.0, lam=0.3, jump=None, n=4, rho=0.3):
    jump = NormalJump(-0.08, 0.35) if jump is None else jump
    return BasketModel.homogeneous(n, 100.0, 1.0 / n, rho, alpha, beta, jump, lam)


def single(sigma=0.2, lam=0.0, jump=None, spot=100.0):
    jump = NormalJump(0.0, 0.0) if jump is None else jump
    return BasketModel([spot], [1.0], [[1.0]], [LocalVolFn(sigma, 1.0)], jump, lam)


@pytest.fixture
def base_model():
    """Four-asset benchmark basket: alpha=0.2, beta=1, lam=0.3, Y ~ N(-0.08, 0.35^2)."""
    return basket()


@pytest.fixture
def constant_jump_model():
    return basket(jump=ConstantJump(-0.25))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    if acceptance_report.RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(acceptance_report.RESULTS):
            terminalreporter.write_line(acceptance_report.RESULTS[key])
