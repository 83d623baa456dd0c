import numpy as np
import pytest

from bgcode.assignment import SystemConfig
from bgcode.workers import TrueGradients


@pytest.fixture
def make_truth():
    def _make(s, u, m, p, d, k=16, seed=0):
        cfg = SystemConfig.from_params(s, u, m, p, d, k=k, seed=seed)
        return cfg, TrueGradients.random(cfg, np.random.default_rng(seed))
    return _make


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
