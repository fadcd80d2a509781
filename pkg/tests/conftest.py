"""Shared pytest wiring: print one PASS/FAIL line per acceptance criterion."""

import re

_ACCEPTANCE_RESULTS: dict[int, str] = {}

_DESCRIPTIONS = {
    1: "closed-form suite",
    2: "purity suite",
    3: "success probabilities",
    4: "tunnel-rate roundtrip",
    5: "steering scan",
    6: "entanglement",
    7: "oracle equivalence",
    8: "determinism",
    9: "end-to-end figure suite",
}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call":
        _ACCEPTANCE_RESULTS[n] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and (report.failed or report.skipped):
        _ACCEPTANCE_RESULTS[n] = "FAIL" if report.failed else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE_RESULTS):
        desc = _DESCRIPTIONS.get(n, "")
        terminalreporter.write_line(
            f"ACCEPTANCE {n} ({desc}): {_ACCEPTANCE_RESULTS[n]}"
        )
