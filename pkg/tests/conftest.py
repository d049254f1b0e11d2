import pytest

from mmlab.models import MidPriceModel
from mmlab.quotes import StrategyParams

# daily parameters of the simulation study
A, K, T, SIGMA, KAPPA = 1500.0, 100.0, 1.0, 0.05, 1.0


@pytest.fixture
def params():
    return StrategyParams(A=A, k=K, T=T, gamma=1.0, eta=0.0)


@pytest.fixture
def martingale():
    return MidPriceModel.martingale(sigma=SIGMA, s0=1.0)


@pytest.fixture
def ou098():
    return MidPriceModel.ou(a=KAPPA, mu=0.98, sigma=SIGMA, s0=1.0)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def _report(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
