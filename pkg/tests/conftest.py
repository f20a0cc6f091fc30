import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """Run a check returning ``(ok, detail)``, record the line, and assert it."""

    def run(number: int, title: str, check):
        try:
            ok, detail = check()
        except Exception as exc:  # recorded as a failure, then re-raised below
            _ACCEPTANCE[number] = (title, False, f"raised {type(exc).__name__}: {exc}")
            raise
        _ACCEPTANCE[number] = (title, bool(ok), detail)
        print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, detail

    return run


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
