import os
import sys
import warnings

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

# numba reports the unusable TBB layer on every parallel launch in this environment
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

settings.register_profile(
    "default",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
