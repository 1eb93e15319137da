import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

from opwave.lattice import parse_dilation  # noqa: E402
from opwave.symbols import parse_operator  # noqa: E402


def make(op_text, dil_text, d=None):
    D = parse_dilation(dil_text, d)
    return parse_operator(op_text, D.d), D


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
