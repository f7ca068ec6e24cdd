import pytest

_CRITERIA: list = []


@pytest.fixture
def criterion(request):
    """Tag an acceptance test with a criterion label and an optional measured summary."""

    def tag(label: str, **measured):
        request.node.user_properties.append(("criterion", label))
        for key, value in measured.items():
            request.node.user_properties.append((key, value))

    return tag


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        extra = ", ".join(f"{k}={v}" for k, v in report.user_properties if k != "criterion")
        _CRITERIA.append((props["criterion"], report.outcome, extra))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, extra in _CRITERIA:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}" + (f"  [{extra}]" if extra else ""))
