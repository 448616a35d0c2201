from functools import lru_cache

import pytest

from qtd.complex import build_levels
from qtd.glued import build_glued_levels
from qtd.substitution import load_builtin


@lru_cache(maxsize=None)
def spec(name):
    return load_builtin(name)


@lru_cache(maxsize=None)
def levels(name, n_max):
    """K_0..K_n_max of a bundled substitution, shared across tests."""
    return tuple(build_levels(spec(name), n_max))


@lru_cache(maxsize=None)
def glued_levels(name, n_max):
    return tuple(build_glued_levels(spec(name), n_max))


@pytest.fixture(params=["grid2", "grid3", "diamond"])
def bundled(request):
    return spec(request.param)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
