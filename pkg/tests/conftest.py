import pytest

from nesytamp.assets import load_bolt_domain, load_bolt_problem


@pytest.fixture(scope="session")
def domain():
    return load_bolt_domain()


@pytest.fixture(scope="session")
def problem(domain):
    return load_bolt_problem(domain)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.REPORT, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
