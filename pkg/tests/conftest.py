import functools
from pathlib import Path

import pytest

from mipswcet import loader

FIXTURES = Path(__file__).parent / "fixtures"


@functools.lru_cache(maxsize=None)
def load_fixture(name: str) -> loader.LoadedProgram:
    return loader.load_image((FIXTURES / name).read_bytes())


def fixture_path(name: str) -> Path:
    return FIXTURES / name


@pytest.fixture(scope="session")
def countdown():
    return load_fixture("countdown.elf")


@pytest.fixture(scope="session")
def absminmax():
    return load_fixture("absminmax.elf")


@pytest.fixture(scope="session")
def classify4():
    return load_fixture("classify4.elf")


@pytest.fixture(scope="session")
def nested():
    return load_fixture("nested.elf")


@pytest.fixture(scope="session")
def sort4():
    return load_fixture("sort4.elf")


@pytest.fixture(scope="session")
def clamp():
    return load_fixture("clamp.elf")


@pytest.fixture(scope="session")
def twopoints():
    return load_fixture("twopoints.elf")


@pytest.fixture(scope="session")
def muldiv():
    return load_fixture("muldiv.elf")


@pytest.fixture(scope="session")
def badjumps():
    return load_fixture("badjumps.elf")


@pytest.fixture(scope="session")
def withdata():
    return load_fixture("withdata.elf")


@pytest.fixture(scope="session")
def mayfault():
    return load_fixture("mayfault.elf")


@pytest.fixture(scope="session")
def calls3():
    return load_fixture("calls3.elf")
