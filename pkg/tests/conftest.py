"""Shared pytest hooks.

Prints a one-line pass/fail verdict per acceptance criterion at the end
of any run that included tests from test_acceptance.py.
"""

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = {}
    for outcome, word in (("passed", "PASS"), ("skipped", "SKIP"),
                          ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m:
                rows[int(m.group(1))] = (word, m.group(2).replace("_", " "))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for n in sorted(rows):
        word, label = rows[n]
        terminalreporter.write_line(f"criterion {n:02d} {word}  ({label})")
