import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,  # same examples every run
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record an acceptance verdict; printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        _CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
