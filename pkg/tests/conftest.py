"""Shared fixtures: offline enforcement, fixture transports, tmp stores."""

from __future__ import annotations

import socket
import time
from pathlib import Path

import pytest

from refs import AdsConfig, FixtureTransport, RefStore

FIXTURE_DIR = Path(__file__).parent / "fixtures"
GOLDEN_DIR = Path(__file__).parent / "goldens"

SUITE_T0 = time.perf_counter()
SUITE_TIME_BUDGET = 60.0
_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE_RESULTS[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_ACCEPTANCE_RESULTS.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status} {name}")
    elapsed = time.perf_counter() - SUITE_T0
    status = "PASS" if elapsed < SUITE_TIME_BUDGET else "FAIL"
    terminalreporter.write_line(
        f"{status} offline suite wall time {elapsed:.1f}s (budget {SUITE_TIME_BUDGET:.0f}s)"
    )


class NetworkBlockedError(RuntimeError):
    pass


@pytest.fixture(autouse=True, scope="session")
def no_network_sockets():
    """The whole suite must run without opening a single network socket."""

    def _blocked(self, *args, **kwargs):
        raise NetworkBlockedError("test attempted to open a network socket")

    original = socket.socket.connect
    socket.socket.connect = _blocked
    yield
    socket.socket.connect = original


class CountingTransport:
    """Delegating transport that remembers every request it carried."""

    def __init__(self, inner):
        self.inner = inner
        self.requests = []

    @property
    def is_live(self):
        return getattr(self.inner, "is_live", False)

    def execute(self, request):
        self.requests.append(request)
        return self.inner.execute(request)

    def count(self, url_fragment: str) -> int:
        return sum(1 for r in self.requests if url_fragment in r.url)


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture()
def transport() -> FixtureTransport:
    return FixtureTransport.from_dir(FIXTURE_DIR)


@pytest.fixture()
def counting_transport(transport) -> CountingTransport:
    return CountingTransport(transport)


@pytest.fixture()
def ads_config() -> AdsConfig:
    return AdsConfig(token="", backoff_base=0.0)


@pytest.fixture()
def store(tmp_path) -> RefStore:
    s = RefStore(tmp_path / "refs.db")
    yield s
    s.close()
