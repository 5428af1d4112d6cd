import math

import numpy as np
import pytest

from fwmsqueeze.params import make_params

# baseline operating point: Delta at its optimum, kappa L just below threshold
P0_ARGS = (1e-3, 1.0, 22.360680, 35.3762)


@pytest.fixture
def p0():
    return make_params(*P0_ARGS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def deep_params(gamma_0=1e-7, omega_rabi=1.0, delta_factor=1.0, kappa_l=1.0):
    """Strong-drive, far-detuned set with Delta = delta_factor * Delta_opt."""
    delta = delta_factor * omega_rabi / math.sqrt(2 * gamma_0)
    return make_params(gamma_0, omega_rabi, delta, kappa_l)


ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
