import math

import numpy as np
import pytest

_REPORT = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    """Record an acceptance verdict line; all lines are echoed in the summary."""
    def emit(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _REPORT.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)


def wrapped_gap(a, b, torus):
    d = abs(a - b)
    return min(d, 1.0 - d) if torus else d


def pairs_by_loops(pos, r, torus=False):
    """Plain double loop over all pairs; independent of the package's distance code."""
    out = set()
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            dx = wrapped_gap(pos[i][0], pos[j][0], torus)
            dy = wrapped_gap(pos[i][1], pos[j][1], torus)
            if math.hypot(dx, dy) <= r:
                out.add((i, j))
    return out
