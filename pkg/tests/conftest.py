from __future__ import annotations

import sys

import pytest

from amoebakit.gallery import builtin_specs, nonreal_line, real_line, real_plane


@pytest.fixture(scope="session")
def specs():
    return builtin_specs()


@pytest.fixture(scope="session")
def planes():
    return {"real-line": real_line(), "nonreal-line": nonreal_line(), "real-plane": real_plane()}



def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance PASS/FAIL lines at the end of the run."""
    lines = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(mod, "LINES"):
            lines = mod.LINES
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
