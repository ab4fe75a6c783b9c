from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from proteus.brokersim import build_taxonomy  # noqa: E402
from proteus.plugins import build_suite, default_registry  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def taxonomy():
    return build_taxonomy()


@pytest.fixture(scope="session")
def registry(taxonomy):
    return default_registry(taxonomy)


@pytest.fixture(scope="session")
def suite(registry):
    return build_suite(registry)


# -- acceptance summary -----------------------------------------------------------

_criteria: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "PASS" if report.outcome == "passed" else "FAIL"
        _criteria[props["criterion"]] = (outcome, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda n: int(n.split()[0])):
        outcome, detail = _criteria[name]
        line = f"{outcome} criterion {name}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
