import pytest

from l4wb.cache import FormStore, default_cache_dir
from l4wb.hecke import eigenforms, victor_miller_basis

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def store():
    # shared with the CLI: $L4WB_CACHE or ~/.cache/l4wb, so a warm cache makes reruns quick
    return FormStore(default_cache_dir())


@pytest.fixture(scope="session")
def delta():
    """Delta with 3000 coefficients: enough for fast unit tests, too few for edge values at X = 1000."""
    return eigenforms(victor_miller_basis(12, 3000), direct=3000)[0]


@pytest.fixture(scope="session")
def delta_full(store):
    return store.forms(12)[0]


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, passed, detail)."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
