import pytest

from cyclicosc.dde_sim import simulate_profile
from cyclicosc.netfile import load_network


@pytest.fixture(scope="session")
def pentilator():
    return load_network("pentilator")[0]


@pytest.fixture(scope="session")
def hes7():
    return load_network("hes7")[0]


@pytest.fixture(scope="session")
def ring3():
    return load_network("repressilator3")[0]


@pytest.fixture(scope="session")
def pentilator_sim(pentilator):
    return simulate_profile(pentilator)


@pytest.fixture(scope="session")
def hes7_sim(hes7):
    return simulate_profile(hes7)


_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one summary line per acceptance criterion: criterion(k, checks)."""

    def record(k, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{'ok' if passed else 'FAIL'} {text}" for text, passed in checks)
        _ACCEPTANCE[k] = (ok, detail)
        failed = [text for text, passed in checks if not passed]
        assert not failed, "; ".join(failed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
