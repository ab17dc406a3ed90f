"""
Shared fixtures. Living at the repository root puts the root on sys.path, so ``dpnibble`` and
``instance`` import without installation.
"""

import pytest
from hypothesis import HealthCheck, settings

from dpnibble.cover import identity_cover, twisted_cycle_cover
from dpnibble.graph import build_graph
from tests.strategies import cycle, path

settings.register_profile('default', deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile('default')


@pytest.fixture
def single_edge():
    return build_graph(2, [(0, 1)])


@pytest.fixture
def c3():
    return cycle(3)


@pytest.fixture
def c4():
    return cycle(4)


@pytest.fixture
def p3():
    return path(3)


@pytest.fixture
def c4_identity_2(c4):
    return identity_cover(c4, 2)


@pytest.fixture
def c4_twisted_2():
    return twisted_cycle_cover(4, 2, {0})
