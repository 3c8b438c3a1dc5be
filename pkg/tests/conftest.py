import random

import pytest

from folnerlab.groups import get_group


@pytest.fixture
def rng():
    return random.Random(20240813)


@pytest.fixture(params=["z1", "z2", "z3", "heisenberg", "lamplighter"])
def group(request):
    return get_group(request.param)


@pytest.fixture
def z1():
    return get_group("z1")


@pytest.fixture
def z2():
    return get_group("z2")


@pytest.fixture
def h3():
    return get_group("heisenberg")


@pytest.fixture
def ll():
    return get_group("lamplighter")
