import pytest

from moran_quant import CylinderMeasure, binary_full, cantor, carpet4, demo_periodic


@pytest.fixture
def cantor_system():
    return cantor()


@pytest.fixture
def cantor_uniform(cantor_system):
    return CylinderMeasure.uniform(cantor_system)


@pytest.fixture
def binary_system():
    return binary_full()


@pytest.fixture
def binary_uniform(binary_system):
    return CylinderMeasure.uniform(binary_system)


@pytest.fixture
def carpet_system():
    return carpet4()


@pytest.fixture
def carpet_uniform(carpet_system):
    return CylinderMeasure.uniform(carpet_system)


@pytest.fixture
def periodic_system():
    return demo_periodic()


@pytest.fixture
def periodic_uniform(periodic_system):
    return CylinderMeasure.uniform(periodic_system)
