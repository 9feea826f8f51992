"""Shared fixtures: coarse geometry and cheap optimizer budgets for speed."""

import numpy as np
import pytest

import satkey as sk


@pytest.fixture(scope="session")
def coarse_orbit():
    return sk.OrbitConfig(time_step_s=1.0)


@pytest.fixture(scope="session")
def zenith_geom(coarse_orbit):
    return sk.pass_geometry(coarse_orbit, d_min_km=0.0)


@pytest.fixture(scope="session")
def baseline_link():
    return sk.LinkModel()


@pytest.fixture(scope="session")
def baseline_params():
    return sk.ProtocolParams()


@pytest.fixture(scope="session")
def baseline_error():
    return sk.ErrorModel()


@pytest.fixture(scope="session")
def security():
    return sk.SecurityParams()


@pytest.fixture(scope="session")
def zenith_tallies(zenith_geom, baseline_link, baseline_params, baseline_error):
    return sk.accumulate_window(zenith_geom, baseline_link, baseline_params, baseline_error)


@pytest.fixture(scope="session")
def fast_space():
    return sk.OptSpace(dt_resolution_s=40.0)


@pytest.fixture(scope="session")
def fast_opt_config():
    return sk.OptConfig(starts=4, warm_starts=1)
