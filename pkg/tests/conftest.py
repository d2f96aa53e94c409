import numpy as np
import pytest

from flagmine import DataMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def lagged_matrix(base, lags, offsets=None):
    """Rows that read ``base`` shifted by ``lags`` (row i at column c holds base[c - t_i])."""
    base = np.asarray(base, float)
    n = len(base)
    offsets = np.zeros(len(lags)) if offsets is None else offsets
    out = np.full((len(lags), n), np.nan)
    for i, (t, o) in enumerate(zip(lags, offsets)):
        for c in range(n):
            if 0 <= c - t < n:
                out[i, c] = base[c - t] + o
    return DataMatrix(out)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line[1])
