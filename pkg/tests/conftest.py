import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from varpricing import CostFunction, Uniform  # noqa: E402


@pytest.fixture(scope="session")
def example():
    """Uniform types on [0, 1] with c1 = 0.0125 + mu^2 and c2 = 0.2 + mu^2 / 4."""
    return Uniform(1.0), CostFunction((0.0125, 0.0, 1.0), 1), CostFunction((0.2, 0.0, 0.25), 2)


# one pass/fail line per acceptance criterion in the terminal summary
_CRITERIA: dict[int, list] = {}
PROPERTY_CRITERION = 10


def _criterion_of(report) -> int | None:
    path, _, name = report.nodeid.partition("::")
    if path.endswith("test_acceptance.py") and name.startswith("test_criterion_"):
        return int(name.removeprefix("test_criterion_").split("_")[0].split("[")[0])
    if path.endswith("test_properties.py"):
        return PROPERTY_CRITERION
    return None


def pytest_runtest_logreport(report):
    k = _criterion_of(report)
    if k is None or (report.when != "call" and report.outcome == "passed"):
        return
    line = next((ln for ln in report.capstdout.splitlines() if ln.startswith(f"criterion {k}:")), None)
    _CRITERIA.setdefault(k, []).append((report.outcome, line))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    if any(k != PROPERTY_CRITERION for k in _CRITERIA) and PROPERTY_CRITERION not in _CRITERIA:
        _CRITERIA[PROPERTY_CRITERION] = []
    for k in sorted(_CRITERIA):
        results = _CRITERIA[k]
        if not results:
            terminalreporter.write_line(f"criterion {k}: NOT RUN (tests/test_properties.py not collected)")
            continue
        ok = all(outcome == "passed" for outcome, _ in results)
        lines = [line for _, line in results if line]
        if len(results) == 1 and lines and lines[0].startswith(f"criterion {k}: {'PASS' if ok else 'FAIL'}"):
            text = lines[0]
        else:
            text = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({sum(o == 'passed' for o, _ in results)}/{len(results)} property tests)"
        terminalreporter.write_line(text)
