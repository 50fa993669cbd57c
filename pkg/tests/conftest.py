import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from oldroydb.spectral import Grid

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[(2, 32), (3, 16)], ids=["2d", "3d"])
def grid(request):
    return Grid(*request.param)


@pytest.fixture
def grid2():
    return Grid(2, 32)


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def record_criterion(request):
    """Print and collect one ``PASS``/``FAIL`` line per acceptance criterion."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        print(line)
        lines.append((number, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
