from datetime import datetime, timezone

import numpy as np
import pytest

from loadcnn.dataset import compute_stats, make_windows
from loadcnn.ingest import LoadSeries

MONDAY = datetime(2009, 7, 13, tzinfo=timezone.utc)

# tiny overfit fixture: 8 windows of a noiseless 12-hour sinusoid
SINE_W, SINE_H, SINE_WINDOWS, SINE_PERIOD = 48, 4, 8, 48
SINE_SEED = 4


def sine_series() -> LoadSeries:
    n = SINE_W + SINE_H + SINE_WINDOWS - 1
    values = 1.0 + 0.5 * np.sin(2 * np.pi * np.arange(n) / SINE_PERIOD)
    return LoadSeries("sine", MONDAY, 15, values)


@pytest.fixture
def sine_windows():
    s = sine_series()
    return make_windows(s, SINE_W, SINE_H, compute_stats(s))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def series(values, start=MONDAY, step=15, label="m1") -> LoadSeries:
    return LoadSeries(label, start, step, np.asarray(values, dtype=float))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
