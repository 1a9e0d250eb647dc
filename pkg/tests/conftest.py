import pytest

from quasiplane.presentations import parse_presentation

F2 = "gens a b\nrels\n"
Z2 = "gens a b\nrels [a,b]\n"
Z2Z2 = "inverse case\ngens a b c d\nrels [a,b] [c,d]\nparabolic a b\nparabolic c d\n"
GENUS2 = "inverse case\ngens a b c d\nrels [a,b][c,d]\n"
FIG8 = "inverse case\ngens x y\nrels XyxYxyXYxY\nbackend exact-matrix\n"


@pytest.fixture(scope="session")
def f2():
    return parse_presentation(F2)


@pytest.fixture(scope="session")
def z2z2():
    return parse_presentation(Z2Z2)


@pytest.fixture(scope="session")
def genus2():
    return parse_presentation(GENUS2)
