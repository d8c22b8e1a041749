import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from boussleray.mesh import build_rect_mesh  # noqa: E402


@pytest.fixture
def two_triangles():
    return build_rect_mesh((0.0, 1.0), (0.0, 1.0), 1, 1)


@pytest.fixture
def small_mesh():
    return build_rect_mesh((0.0, 1.0), (0.0, 1.0), 2, 2)


@pytest.fixture
def skewed_mesh():
    """Non-uniform rectangle so that element Jacobians differ."""
    return build_rect_mesh((-0.5, 1.5), (0.25, 1.0), 3, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
