import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; ``rec(n, ok, detail)`` stores the verdict.

    A test that raises before calling ``rec`` is recorded as FAIL.
    """
    seen = []

    def rec(number, ok, detail=""):
        seen.append(number)
        _CRITERIA[number] = (bool(ok), detail)
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        return ok

    yield rec
    rep = getattr(request.node, "rep_call", None)
    if rep is not None and rep.failed:
        for n in seen:
            _CRITERIA[n] = (False, _CRITERIA[n][1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
        number = item.get_closest_marker("criterion")
        if number is not None and rep.failed and number.args[0] not in _CRITERIA:
            _CRITERIA[number.args[0]] = (False, f"raised: {call.excinfo.typename if call.excinfo else '?'}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
