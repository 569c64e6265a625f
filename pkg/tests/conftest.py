import pytest

from qubo_hu.instances import InstanceSeedSpec, generate_instance


@pytest.fixture(scope="session")
def small_instance():
    return generate_instance(InstanceSeedSpec(16, 4, 3))


@pytest.fixture(scope="session")
def medium_instance():
    return generate_instance(InstanceSeedSpec(32, 4, 1))


def random_symmetric(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) * scale
    return 0.5 * (a + a.T)


# one line per acceptance criterion, filled by test_acceptance.verdict
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
