from hypothesis import settings

from _report import LINES

# Derandomized so the suite is reproducible run to run.
settings.register_profile("repro", derandomize=True, deadline=None, print_blob=True)
settings.load_profile("repro")


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
