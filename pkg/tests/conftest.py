import itertools

import pytest
from hypothesis import settings

from cbtree.core import FAILURE, RUNNING, SUCCESS, Node

settings.register_profile("ci", deadline=None, max_examples=100)
settings.load_profile("ci")

STATUSES = (SUCCESS, RUNNING, FAILURE)


class Fixed(Node):
    """Leaf that answers a preset status and counts ticks and halts."""

    kind = "fixed"

    def __init__(self, status, label=None):
        super().__init__((), label)
        self.value = status
        self.ticks = 0
        self.halts = 0

    def _tick(self, world):
        self.ticks += 1
        return self.value

    def on_halt(self, world):
        self.halts += 1

    def progress(self, world):
        return 1.0 if self.value is SUCCESS else 0.0


class Scripted(Fixed):
    """Leaf that walks through a list of statuses, repeating the last one."""

    kind = "scripted"

    def __init__(self, script, label=None):
        super().__init__(script[0], label)
        self.script = list(script)

    def _tick(self, world):
        s = self.script[min(self.ticks, len(self.script) - 1)]
        self.ticks += 1
        return s


def assignments(n):
    return itertools.product(STATUSES, repeat=n)


@pytest.fixture
def world():
    from cbtree.core import World

    return World()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
