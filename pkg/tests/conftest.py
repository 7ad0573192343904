import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from noisytree.treekit import from_parents

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def small_trees(draw, min_n=2, max_n=12):
    """Random recursive trees with a random treasure."""
    n = draw(st.integers(min_n, max_n))
    parent = [-1] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    tau = draw(st.integers(0, n - 1))
    return from_parents(np.array(parent), tau)


@pytest.fixture
def path3():
    from noisytree.treekit import build_path
    return build_path(2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(RESULTS, key=lambda k: int(k[2:])):
            terminalreporter.write_line(RESULTS[cid])
