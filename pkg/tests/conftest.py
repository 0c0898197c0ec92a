import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from marsupial.environment import Box, PointCloud, build_environment  # noqa: E402
from marsupial.synthetic import dedupe, plane_z  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


@pytest.fixture(scope="session")
def floor_env():
    """Open 8 x 4 m floor with nothing above it."""
    pts = dedupe(plane_z(0, 8, 0, 4, 0.0, 0.1))
    return build_environment(PointCloud(pts), Box((-0.5, -0.5, -0.5), (8.5, 4.5, 4.0)), (1.0, 2.0, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 9):
        line = acceptance.VERDICTS.get(n, f"criterion {n}: NOT RUN")
        terminalreporter.write_line(line)
