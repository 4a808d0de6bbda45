import math
import os

# Keep test runs from writing log files; must happen before ooscam.config is imported.
os.environ["LOG_FILE"] = ""

import numpy as np
import pytest

from ooscam.astro.elements import KeplerianElements
from ooscam.astro.epoch import Epoch
from ooscam.environment.types import ActionTable, Maneuver
from ooscam.scenarios.generator import ConjunctionSpec, case_study_scenario, make_collision_scenario

START = Epoch(6600.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240124)


@pytest.fixture(scope="session")
def case_study():
    return case_study_scenario()


@pytest.fixture(scope="session")
def collision_spec():
    return ConjunctionSpec(dt_tca=0.8 * 86400.0, approach_angle=math.pi / 2, vel_ratio=1.0,
                           phase_offset=math.radians(12.0))


@pytest.fixture(scope="session")
def collision_scenario(case_study, collision_spec):
    return make_collision_scenario(case_study.target, collision_spec, case_study.start)


def circular(a=7000.0, i=0.0, raan=0.0, nu=0.0, epoch=START):
    return KeplerianElements(a, 0.0, i, raan, 0.0, nu, epoch)


def coast_table(epoch: Epoch) -> ActionTable:
    """Four zero burns at one epoch."""
    return ActionTable(tuple(Maneuver((0.0, 0.0, 0.0), epoch) for _ in range(4)))
