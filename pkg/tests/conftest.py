import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import helpers  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not helpers.ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in helpers.acceptance_lines():
        terminalreporter.write_line(line)
