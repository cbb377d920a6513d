from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import pytest

from trustrisk.domain import AssessmentConfig, DeveloperHistory, PublisherHistory, SoftwareRecord
from trustrisk.scoring import SegmentInputs

FIXTURES = Path(__file__).parent / "fixtures"
NOW = datetime(2024, 1, 1, tzinfo=timezone.utc)


def reference_record(**changes) -> SoftwareRecord:
    values = dict(
        software_id="example",
        developer_ids=("W",),
        publisher_ids=("Z",),
        year=2018,
        language="Java",
        update_frequency=0.08424,
        forks=2003,
        downloads=20455,
        vulnerabilities_unresolved=135,
        vulnerabilities_total=7556,
        dependency_count=28,
        rating_count=7153,
        code_coverage=0.99,
        context=0.2,
        code_length=304,
    )
    values.update(changes)
    return SoftwareRecord(**values)


REFERENCE_DEVELOPER = DeveloperHistory("W", 96912, 129, 33, 2, 2)
REFERENCE_PUBLISHER = PublisherHistory("Z", 123, 2)


def reference_inputs(**changes) -> SegmentInputs:
    return SegmentInputs(reference_record(**changes), (REFERENCE_DEVELOPER,), (REFERENCE_PUBLISHER,))


@pytest.fixture
def config() -> AssessmentConfig:
    return AssessmentConfig()


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


# Acceptance summary: one line per criterion test, printed after the run.
_acceptance: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        status = {"passed": "PASS", "skipped": "SKIP"}.get(outcome, "FAIL")
        terminalreporter.write_line(f"[{status}] {name}")
