import pytest

from hamsym.registry import load_example


@pytest.fixture(scope="session")
def example1():
    return load_example("example1")


@pytest.fixture(scope="session")
def coulomb():
    return load_example("coulomb")


@pytest.fixture(scope="session")
def oscillator():
    return load_example("oscillator")


@pytest.fixture(scope="session")
def kepler2():
    return load_example("kepler2")


@pytest.fixture(scope="session")
def kepler3():
    return load_example("kepler3")
