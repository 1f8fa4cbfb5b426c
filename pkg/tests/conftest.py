import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ekg_axis.chart import solve_chart
from ekg_axis.config import RunConfig
from ekg_axis.evolution import evolve
from ekg_axis.grid import make_grid
from ekg_axis.initial_data import DataFamilyParams, build_initial_data

STANDARD = DataFamilyParams(a_gamma=0.1, a_phi=0.1, p=1.0, w=1.0, mass_param=1.0)
VACUUM = DataFamilyParams(a_gamma=0.0, a_phi=0.0)


def run(params, n_cells, t_end=8.0, r_max=20.0):
    return evolve(build_initial_data(params, make_grid(r_max, n_cells)), t_end)


@pytest.fixture(scope="session")
def weak_traj():
    return run(STANDARD, 512)


@pytest.fixture(scope="session")
def weak_traj_fine():
    return run(STANDARD, 1024)


@pytest.fixture(scope="session")
def weak_chart(weak_traj):
    return solve_chart(weak_traj)


@pytest.fixture(scope="session")
def flat_traj():
    return run(VACUUM, 256)


@pytest.fixture(scope="session")
def flat_chart(flat_traj):
    return solve_chart(flat_traj)


@pytest.fixture(scope="session")
def canonical_cfg():
    return RunConfig(n_cells=512)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "REPORT", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.REPORT:
        terminalreporter.write_line(line)
