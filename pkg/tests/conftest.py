from importlib import resources

import pytest

from mdicw import tables

DATA = resources.files("mdicw") / "data"

EXPERIMENT_CFG = dict(mu=0.529, nu=0.057, n_sigma=3.89, p_d=1e-6)


def data_path(name):
    return str(DATA / name)


@pytest.fixture(scope="session")
def tomography():
    return tables.read_counts(data_path("tomography.csv"))


@pytest.fixture(scope="session")
def control_mixed():
    return tables.read_counts(data_path("control_mixed.csv"))


@pytest.fixture(scope="session")
def control_split():
    return tables.read_counts(data_path("control_split.csv"))
