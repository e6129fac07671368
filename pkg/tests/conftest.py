import os
import sys

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion."""
    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, passed, detail))
        print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} {detail}".rstrip())
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}  {detail}".rstrip())
