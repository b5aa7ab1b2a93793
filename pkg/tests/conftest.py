"""
Shared fixtures: seeded generators, small height maps and simulated
observation sets.
"""

import logging

import numpy as np
import pytest

from fractomatch.emfit import FitConfig
from fractomatch.matchkit import train
from fractomatch.simharness import SimSpec, observations_for_set, simulate_set
from fractomatch.spectral import BandPlan
from fractomatch.spectral.dataset import split_by_label
from fractomatch.surface import HeightMap

TRANSFORM_SIZE = 256


@pytest.fixture(autouse=True)
def reset_package_logger():
    """Undo the handlers a CLI invocation installs on the package logger."""
    yield
    package = logging.getLogger("fractomatch")
    package.handlers.clear()
    package.propagate = True
    package.setLevel(logging.NOTSET)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_map(rng):
    """128 x 128 white-noise map at 1 um pitch."""
    return HeightMap(rng.standard_normal((128, 128)), pitch=1.0)


@pytest.fixture
def tilted_map(rng):
    yy, xx = np.indices((96, 80), dtype=np.float64)
    heights = 2.0 + 0.003 * xx - 0.002 * yy + 0.01 * rng.standard_normal((96, 80))
    return HeightMap(heights, pitch=1.0)


@pytest.fixture(scope="session")
def sim_spec():
    return SimSpec(seed=7)


@pytest.fixture(scope="session")
def band_plan():
    return BandPlan()


@pytest.fixture(scope="session")
def training_observations(sim_spec, band_plan):
    """9 surfaces: 9 matches and 72 non-matches."""
    return observations_for_set(simulate_set(sim_spec, 9, "T"), band_plan, TRANSFORM_SIZE)


@pytest.fixture(scope="session")
def test_observations(sim_spec, band_plan):
    """4 held-out surfaces: 4 matches and 12 non-matches."""
    return observations_for_set(simulate_set(sim_spec, 4, "H"), band_plan, TRANSFORM_SIZE)


@pytest.fixture(scope="session")
def trained_model(training_observations):
    matches, nonmatches = split_by_label(training_observations)
    return train(matches, nonmatches, FitConfig(nu=10.0), name="T")
