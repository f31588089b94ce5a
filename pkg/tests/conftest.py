import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rfpipe.core import ImageGrid, PipelineConfig, ProbeGeometry  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_setup():
    """A probe/grid/config small enough for fast end-to-end tests."""
    cfg = PipelineConfig(n_f=4)
    geom = ProbeGeometry(16, 3e-4, cfg.c)
    grid = ImageGrid(-2.4e-3, 2.4e-3, 8e-3, 16e-3, 17, 17)
    return cfg, geom, grid, 512


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for tag in sorted(LINES, key=lambda t: int(t[2:])):
            terminalreporter.write_line(LINES[tag])
