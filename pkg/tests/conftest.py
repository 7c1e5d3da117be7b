import os

import pytest

from rough_em import _backend

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, passed, detail)``."""

    def record(number, passed, detail=""):
        _CRITERIA[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


@pytest.fixture(params=sorted(_backend.available_backends()))
def backend(request):
    return _backend.available_backends()[request.param]


@pytest.fixture
def clean_thread_env(monkeypatch):
    monkeypatch.delenv("ROUGH_EM_THREADS", raising=False)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>3}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_report_header(config):
    return f"rough_em kernel backend: {_backend.BACKEND} (ROUGH_EM_BACKEND={os.environ.get('ROUGH_EM_BACKEND', '')})"
