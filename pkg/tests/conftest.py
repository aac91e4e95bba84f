import numpy as np
import pytest

from coherent_qfi.psf import make_gaussian_psf, make_grid_psf

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def gauss():
    return make_gaussian_psf(1.0)


@pytest.fixture(scope="session")
def grid_gauss(gauss):
    x = np.arange(-1200, 1201) * 0.01
    return make_grid_psf(-12.0, 0.01, gauss.amplitude(x))


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
