import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def sylvester_hadamard(order):
    """Unnormalised Hadamard matrix of size ``2**order``."""
    H = np.array([[1.0]])
    for _ in range(order):
        H = np.block([[H, H], [H, -H]])
    return H


# One summary line per acceptance criterion, printed even when output is captured.
_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_c" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        num = int(name[len("test_c"):].split("_")[0])
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[num] = (report.outcome.upper(), name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        outcome, name, detail = _CRITERIA[num]
        verdict = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {verdict}  {name}  {detail}")
