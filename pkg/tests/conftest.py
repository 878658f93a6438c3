from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from chiplink import FrameConfig, ReliabilityTargets, bundled_library, load_cost_table
from chiplink.config import DEFAULT_COST_TABLE, ScenarioConfig, _data_or_path

# property tests draw from a fixed seed so every run sees the same cases
settings.register_profile(
    "fixed",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fixed")


@pytest.fixture(scope="session")
def costs():
    return load_cost_table(_data_or_path(ScenarioConfig(), DEFAULT_COST_TABLE))


@pytest.fixture(scope="session")
def library():
    return bundled_library("links_table2_7nm_feccrc")


@pytest.fixture
def hybrid():
    return FrameConfig(256, 8, "hybrid")


@pytest.fixture
def fec():
    return FrameConfig(256, 8, "fec_only")


@pytest.fixture
def targets():
    return ReliabilityTargets()


def pytest_collection_modifyitems(items):
    # hypothesis-driven tests form the property suite (``-m property``)
    for item in items:
        fn = getattr(item, "function", None)
        if getattr(fn, "is_hypothesis_test", False):
            item.add_marker(pytest.mark.property)


_ACCEPTANCE: list = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(criterion: int, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
