from __future__ import annotations

import json
import os

import pytest
from hypothesis import HealthCheck, settings

from opalfield import synthgen
from opalfield.suite import run_suite

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SIZE = 128
N = 9

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def suite_specs():
    return dict(synthgen.standard_suite(N, SIZE))


@pytest.fixture(scope="session")
def rendered(suite_specs):
    """name -> (LightField, GroundTruth) for the whole standard suite."""
    return {name: synthgen.render_scene(spec) for name, spec in suite_specs.items()}


@pytest.fixture(scope="session")
def suite_run(tmp_path_factory):
    """One full suite run on disk; returns (output dir, report)."""
    out = tmp_path_factory.mktemp("suite_a")
    report = run_suite(out, n=N, size=SIZE, threads=1)
    return out, report


@pytest.fixture(scope="session")
def suite_rerun(tmp_path_factory):
    """Second run with a different worker count and without images."""
    out = tmp_path_factory.mktemp("suite_b")
    report = run_suite(out, n=N, size=SIZE, threads=2, render=False)
    return out, report


def record(criterion: int, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}  {detail}")


def load_report(path) -> dict:
    return json.loads((path / "report.json").read_text(encoding="utf-8"))
