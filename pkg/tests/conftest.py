import pytest

from sparcska import SourceModel

_ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def base_model():
    """Unit source variance, Bob noise 0.1, Eve noise 0.2."""
    return SourceModel(1.0, 0.1, 0.2)


@pytest.fixture
def acceptance():
    """Record one acceptance criterion outcome for the end-of-run summary."""

    def record(number: int, title: str, checks: dict, elapsed: float, limit: float, detail: str = ""):
        checks = dict(checks)
        checks[f"runtime {elapsed:.2f}s < {limit:g}s"] = elapsed < limit
        passed = all(checks.values())
        failed = [name for name, ok in checks.items() if not ok]
        text = detail + ("" if passed else f" | failed: {'; '.join(failed)}")
        _ACCEPTANCE.append((number, title, passed, text))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {title} {text}")
        return passed, failed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, title, passed, text in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {text}")
