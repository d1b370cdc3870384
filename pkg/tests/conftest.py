import pytest

from constel_maint.scenario_file import load_scenario

# Decision vectors of the published case study (h_parking in km, mttr in weeks).
TABLE5 = dict(s=4, q=4, k_s=10, k_q=10, n_oos=4, n_parking=6, h_parking=795.4)
TABLE8 = dict(s=3, q=4, k_s=6, k_q=10, n_oos=4, n_parking=7, h_parking=700.4, p_oos=0.6, mttr=12.0)


@pytest.fixture(scope="session")
def baseline():
    return load_scenario("baseline")


@pytest.fixture(scope="session")
def baseline_no_oos(baseline):
    return baseline.without_oos()


@pytest.fixture(scope="session")
def table5(baseline):
    return baseline.decision.replace(**TABLE5)


@pytest.fixture(scope="session")
def table8(baseline):
    return baseline.decision.replace(**TABLE8)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(request):
    """Record a one-line verdict per acceptance check, printed in the terminal summary."""
    def record(label, detail):
        ACCEPTANCE_LINES.append((request.node.nodeid, label, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when == "call" or key != "passed":
                outcomes[rep.nodeid] = key
    terminalreporter.section("acceptance criteria")
    for nodeid, label, detail in ACCEPTANCE_LINES:
        verdict = "PASS" if outcomes.get(nodeid) == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}: {detail}")
