import sys

import numpy as np
import pytest
from hypothesis import settings

from rigsolve import GenSpec, build_cache, generate

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SMALL = GenSpec(n_vertices=200, m=8, n_pairs=10, n_triples=3, n_quads=2,
                n_frames=12, sparsity=0.4, seed=11)


@pytest.fixture(scope="session")
def small():
    return generate(SMALL)


@pytest.fixture(scope="session")
def small_cache(small):
    return build_cache(small.rig)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = sorted(getattr(mod, "RESULTS", []), key=lambda s: int(s.split()[1][1:]))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
