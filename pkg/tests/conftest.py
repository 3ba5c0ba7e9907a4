from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"

# Lines collected by the acceptance module, echoed after the run.
ACCEPTANCE_LINES: list[str] = []


def staircase(step_times=(5.0, 10.0, 15.0, 20.0), step=0.2, dt=1.0 / 64, t_end=25.0, base=0.8):
    """Synthetic apex history: flat plateaus with instantaneous risers.

    The default sample spacing is a power of two so every sample time, and
    hence every interval between events, is exact in binary.
    """
    t = np.arange(round(t_end / dt) + 1) * dt
    apex = base + step * np.searchsorted(np.asarray(step_times), t, side="right")
    return t, apex


@pytest.fixture
def staircase_trace(tmp_path):
    """A two-column trace CSV, the minimum ``analyze`` accepts."""
    t, apex = staircase()
    path = tmp_path / "staircase.csv"
    with open(path, "w") as fh:
        fh.write("t,apex\n")
        for ti, ai in zip(t, apex):
            fh.write(f"{float(ti)!r},{float(ai)!r}\n")
    return path


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
