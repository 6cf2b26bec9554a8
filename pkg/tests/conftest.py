from collections import defaultdict

import pytest

_outcomes = defaultdict(list)
_titles = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    n, title = mark.args
    _titles[n] = title
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes[n].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _titles:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_titles):
        res = _outcomes.get(n, [])
        ok = bool(res) and all(p for _, p in res)
        failed = [name for name, p in res if not p]
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {_titles[n]} ({len(res) - len(failed)}/{len(res)} tests)"
        tr.write_line(line)
        for name in failed:
            tr.write_line(f"         failing: {name}")
