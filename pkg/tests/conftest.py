import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import pytest

_ACCEPTANCE: dict[int, str] = {}


class _Recorder:
    def __init__(self):
        self.lines = {}

    def __call__(self, number: int, ok: bool, detail: str) -> None:
        self.lines[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, detail


@pytest.fixture
def acceptance(request):
    rec = _Recorder()
    yield rec
    if not rec.lines:
        num = request.node.get_closest_marker("criterion").args[0]
        rec.lines[num] = f"criterion {num:2d}: FAIL  (raised before a verdict)"
    _ACCEPTANCE.update(rec.lines)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
