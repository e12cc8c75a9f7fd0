import numpy as np
import pytest

from dualhelm.regime import ModelParameters
from dualhelm.resolvent import TorusGrid


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    def log(number, passed, detail):
        line = f"CRITERION {number:02d}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        return passed

    return log


@pytest.fixture(scope="session")
def params3():
    return ModelParameters(3, -1.0, 0.0, 5.0)


@pytest.fixture(scope="session")
def small_grid3(params3):
    """Coarse 3-D box for fast solver tests."""
    return TorusGrid.auto(params3.roots, 3, n=32, wavelengths=4)


def uplus_field(prob, rng, band=(1.0, 2.5), tries=50):
    """Random field with ``Q(v) > 0``: spectrum just outside the ``a1`` shell,
    where the multiplier is positive. Rejection covers nonconstant weights."""
    from dualhelm.dual import in_uplus

    grid = prob.grid
    a1 = prob.params.roots.a1
    s = grid.freq_sq
    mask = (s > band[0] * a1) & (s < band[1] * a1)
    for _ in range(tries):
        spec = (rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape)) * mask
        v = grid.ifft(spec)
        v *= np.exp(-grid.radius() ** 2 / (2 * (grid.L / 6) ** 2))
        if in_uplus(v, prob):
            return v / np.max(np.abs(v))
    raise RuntimeError("no U+ sample found")
