import pytest

from anisouq.covkl import build_expansion, example_model
from anisouq.mesh import build_hierarchy


@pytest.fixture(scope="session")
def meshes():
    return build_hierarchy(3)


@pytest.fixture(scope="session")
def kl_level0(meshes):
    return {e: build_expansion(example_model(e), meshes[0]) for e in (1, 2)}


_ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store one pass/fail line per acceptance criterion for the summary."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(_ACCEPTANCE[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
