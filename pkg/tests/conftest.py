import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from support import ACCEPTANCE_LINES

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_SCRIPT = REPO_ROOT / "scripts" / "make_fixture.py"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory) -> Path:
    """Synthetic planted-bias dataset, built once per session by the
    repository's fixture script."""
    out = tmp_path_factory.mktemp("fixture")
    subprocess.run(
        [sys.executable, str(FIXTURE_SCRIPT), "--out", str(out)],
        check=True,
        cwd=REPO_ROOT,
    )
    return out
