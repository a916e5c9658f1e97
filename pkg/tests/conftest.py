import pytest

_ACCEPTANCE: dict[int, tuple[bool, str, float]] = {}


@pytest.fixture
def record_criterion():
    """Store the outcome of one acceptance criterion for the summary lines."""
    def _record(num: int, ok: bool, detail: str, seconds: float) -> None:
        _ACCEPTANCE[num] = (bool(ok), detail, seconds)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        ok, detail, secs = _ACCEPTANCE[num]
        terminalreporter.write_line(
            f"criterion {num}: {'PASS' if ok else 'FAIL'} ({secs:.3f} s) {detail}")
