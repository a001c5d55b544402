import sys

import numpy as np
import pytest

from epchiral import analysis, dynamics, model, schedule

OMEGA = 2 * np.pi * 0.1
OMEGA_0 = 2 * np.pi * 10


@pytest.fixture(scope="session")
def Omega():
    return OMEGA


@pytest.fixture(scope="session")
def params():
    return model.SystemParams.from_detuning(OMEGA_0, OMEGA)


@pytest.fixture(scope="session")
def loop_spec():
    """EP-encircling loop of the chirality figures, starting on the branch cut."""
    return schedule.encircling_loop(OMEGA)


@pytest.fixture(scope="session")
def straight_spec():
    return schedule.straight_path(OMEGA)


@pytest.fixture(scope="session")
def loop_runs(params, loop_spec):
    """Trajectories for (direction, initial label) on the encircling loop."""
    return {(d, lab): dynamics.integrate_envelope(params, loop_spec.with_direction(d), lab)
            for d in (schedule.CW, schedule.CCW) for lab in dynamics.LABELS}


@pytest.fixture(scope="session")
def straight_runs(params, straight_spec):
    return {(d, lab): dynamics.integrate_envelope(params, straight_spec.with_direction(d), lab)
            for d in (schedule.CW, schedule.CCW) for lab in dynamics.LABELS}


@pytest.fixture(scope="session")
def loop_reports(loop_runs):
    return {k: analysis.classify_final(t) for k, t in loop_runs.items()}


@pytest.fixture(scope="session")
def straight_reports(straight_runs):
    return {k: analysis.classify_final(t) for k, t in straight_runs.items()}


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
