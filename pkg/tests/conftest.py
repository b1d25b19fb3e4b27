import math

import pytest

from spfc import SystemParams, sawtooth

GHZ = 2 * math.pi * 1e9
OMEGA = 50 * GHZ
PERIOD = 2 * math.pi / OMEGA


def fig4_system(**kw) -> SystemParams:
    base = dict(g=8 * GHZ, kappa=16 * GHZ, gamma=1 * GHZ, omega_mod=OMEGA, drive=sawtooth(0.0, OMEGA))
    base.update(kw)
    return SystemParams(**base)


@pytest.fixture
def system():
    return fig4_system()


# acceptance report: one line per criterion, printed at the end of the session
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
