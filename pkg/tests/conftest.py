import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bwkb.core import PhysicalParams, build_channel_grids, make_geometry
from bwkb.manufactured import random_data
from bwkb.wkb import build_expansion

settings.register_profile("bwkb", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("bwkb")


@pytest.fixture(scope="session")
def geo():
    return make_geometry(2 * np.pi, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def prm():
    return PhysicalParams(1.0, 1.0, 1.0, 1.0)


# Study setting: a thicker slab and kappa = 4 keep the cutoff transition
# (d in [b/4, 3b/8]) far from the layer over the whole eps window.
@pytest.fixture(scope="session")
def study_geo():
    return make_geometry(2 * np.pi, 1.0, 4.0, 1.0)


@pytest.fixture(scope="session")
def study_prm():
    return PhysicalParams(4.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def study_data(study_geo):
    return random_data(study_geo, 6, seed=1)


@pytest.fixture(scope="session")
def study_bundle(study_geo, study_prm, study_data):
    return build_expansion(study_data, study_geo, study_prm, 4, grids=build_channel_grids(study_geo, 32))


@pytest.fixture(scope="session")
def small_bundle(geo, prm):
    data = random_data(geo, 4, seed=5)
    return build_expansion(data, geo, prm, 4, grids=build_channel_grids(geo, 24))


# one line per acceptance criterion, printed after the run regardless of capture
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
