import pytest

from aclab.nonlinearity import make_cubic
from aclab.profile import compute_profile

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def cubic():
    return make_cubic()


@pytest.fixture(scope="session")
def prof(cubic):
    return compute_profile(cubic)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; call ``acceptance(n, ok, detail)``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(n, ok, detail):
        line = f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        lines.append((n, line))
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
