"""Shared pytest configuration: per-criterion acceptance summary lines."""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            match = _CRITERION.search(getattr(rep, "nodeid", ""))
            if match and getattr(rep, "when", "call") == "call":
                rows[int(match.group(1))] = label
    if rows:
        terminalreporter.section("acceptance criteria")
        for k in sorted(rows):
            terminalreporter.write_line(f"ACCEPTANCE {k}: {rows[k]}")
