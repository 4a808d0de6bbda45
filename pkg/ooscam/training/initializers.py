"""Starting action tables for training: uniformly random burns, or Lambert phasing for the docking rows."""
from typing import Optional

import numpy as np
from loguru import logger

from ooscam.astro.constants import EARTH, CentralBody
from ooscam.astro.epoch import Epoch
from ooscam.astro.kepler import propagate
from ooscam.astro.lambert import lambert
from ooscam.environment.types import ROWS, ActionTable, Maneuver, Scenario

DEFAULT_DV_MAX = 2.0  # m/s
# A coasting servicer this close to the target [km] needs no transfer burn.
COAST_TOLERANCE = 1e-3


def _random_rows(rng: np.random.Generator, count: int, lo: float, hi: float, dv_max: float):
    dv = rng.uniform(-dv_max, dv_max, size=(count, 3)) if dv_max > 0 else np.zeros((count, 3))
    times = np.sort(rng.uniform(lo, hi, size=count))
    return [Maneuver((float(d[0]), float(d[1]), float(d[2])), Epoch(float(t))) for d, t in zip(dv, times)]


def init_random(scenario: Scenario, seed: int, dv_max: float = DEFAULT_DV_MAX) -> ActionTable:
    """Four burns with dv components uniform in [-dv_max, dv_max] at sorted uniform times in the window."""
    if dv_max < 0:
        raise ValueError(f"dv_max must be non-negative, got {dv_max}")
    rng = np.random.default_rng(seed)
    return ActionTable(tuple(_random_rows(rng, ROWS, scenario.start.mjd2000, scenario.end.mjd2000, dv_max)))


def init_lambert(scenario: Scenario, t1: Epoch, t2: Epoch, seed: int, dv_max: float = DEFAULT_DV_MAX,
                 body: CentralBody = EARTH, prograde: Optional[bool] = None) -> ActionTable:
    """
    Docking rows from a Lambert transfer of the servicer onto the target's position at t2:
    row 1 injects onto the transfer at t1, row 2 matches the target velocity at t2.
    Rows 3-4 are random CAM burns after t2.

    :raises LambertFailure: if no transfer exists for the geometry.
    """
    if not scenario.start <= t1 < t2 <= scenario.end:
        raise ValueError(f"Need start <= t1 < t2 <= end, got t1={t1.mjd2000}, t2={t2.mjd2000}")
    servicer = propagate(scenario.servicer, t1, body)
    target = propagate(scenario.target, t2, body)
    coast = propagate(scenario.servicer, t2, body)

    if float(np.linalg.norm(coast.r - target.r)) < COAST_TOLERANCE:
        burn_1 = np.zeros(3)
        burn_2 = (target.v - coast.v) * 1000.0
    else:
        if prograde is None:
            prograde = bool(servicer.angular_momentum()[2] >= 0.0)
        v0, v1 = lambert(servicer.r, target.r, t2.seconds_since(t1), body, prograde)
        burn_1 = (v0 - servicer.v) * 1000.0
        burn_2 = (target.v - v1) * 1000.0
    logger.info(f"Lambert docking guess: burn 1 {np.linalg.norm(burn_1):.3f} m/s, "
                f"burn 2 {np.linalg.norm(burn_2):.3f} m/s over {t2.seconds_since(t1):.1f} s")

    rng = np.random.default_rng(seed)
    cam = _random_rows(rng, 2, t2.mjd2000, scenario.end.mjd2000, dv_max)
    return ActionTable((
        Maneuver(tuple(float(x) for x in burn_1), t1),
        Maneuver(tuple(float(x) for x in burn_2), t2),
        *cam,
    ))
