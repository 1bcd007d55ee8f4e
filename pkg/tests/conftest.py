import os

import pytest

from uavcodesign import uavspec

DATA_DIR = os.path.join(os.path.dirname(uavspec.__file__), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


@pytest.fixture(scope="session")
def nano_problem():
    return uavspec.load_problem(data_path("nano.toml"))


@pytest.fixture(scope="session")
def micro_problem():
    return uavspec.load_problem(data_path("micro.toml"))


@pytest.fixture(scope="session")
def mini30_problem():
    return uavspec.load_problem(data_path("mini-30fps.toml"))


@pytest.fixture(scope="session")
def mini60_problem():
    return uavspec.load_problem(data_path("mini-60fps.toml"))
