import pytest


@pytest.fixture
def scorecard(request):
    """Writer that puts one line per acceptance criterion into the live
    terminal stream, so the scorecard is visible even though test
    stdout is captured."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def announce(number: int, passed: bool, detail: str) -> None:
        verdict = "PASS" if passed else "FAIL"
        line = f"acceptance {number:2d} {verdict}: {detail}"
        if reporter is not None:
            reporter.ensure_newline()
            reporter.write_line(line)
        else:
            print(line)

    return announce
