from dataclasses import replace

import pytest

from cvnetsim.config import config_from_dict
from cvnetsim.presets import install_preset
from cvnetsim.scenario import run_scenario


def short(name: str, duration: float = 5.0, **overrides):
    return replace(install_preset(name), duration=duration, **overrides)


MATRIX = {
    "mmwave-20cv": lambda: short("fig5-mmwave-35mph", 4.0),
    "mmwave-40cv": lambda: short("fig6-40cv-55mph", 4.0),
    "mmwave-10mbps": lambda: short("fig7-10mbps", 1.0),
    "mmwave-256b": lambda: short("fig8-256b", 4.0),
    "mmwave-probabilistic": lambda: config_from_dict(
        {"scenario": {"preset": "fig5-mmwave-45mph", "duration": 4}, "channel": {"blockage_mode": "probabilistic"}}),
    # one CV offered far more than a 10 MHz carrier can move
    "mmwave-saturated": lambda: config_from_dict(
        {"scenario": {"preset": "fig7-10mbps", "duration": 2, "cv_count": 1}, "radio": {"bandwidth": 10e6},
         "traffic": {"packet_size": 256, "offered_rate": "100 Mbps"}}),
    "dsrc-20cv": lambda: short("fig5-dsrc-55mph", 4.0),
    "dsrc-no-retry": lambda: config_from_dict(
        {"scenario": {"preset": "fig5-dsrc-45mph", "duration": 4}, "mac_dsrc": {"retry_limit": 0}}),
}


@pytest.fixture(scope="session")
def mmwave_run():
    return run_scenario(short("fig5-mmwave-45mph"), seed=7, trace_allocations=True)


@pytest.fixture(scope="session")
def dsrc_run():
    return run_scenario(short("fig5-dsrc-45mph"), seed=7, trace_allocations=True)


# acceptance verdicts, echoed once more at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
