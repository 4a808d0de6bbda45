"""
Collision scenario synthesis.

Debris is built backwards from a chosen collision: at start + dt_tca it shares
the target's position, with its velocity rotated by the approach angle and
scaled by the velocity ratio. The case study is reproduced from fixed elements.
"""
from dataclasses import dataclass
import math
from typing import Optional

import numpy as np
from loguru import logger

from ooscam.astro.constants import EARTH, SECONDS_PER_DAY, CentralBody
from ooscam.astro.elements import CartesianState, KeplerianElements, UnsupportedOrbit, state_to_elements
from ooscam.astro.epoch import Epoch
from ooscam.astro.kepler import propagate, propagate_elements
from ooscam.conjunction.probability import CovarianceSpec
from ooscam.environment.types import ActionTable, Maneuver, Scenario

DEFAULT_WINDOW_DAYS = 2.2

CASE_STUDY_START = "2018-01-24T21:35:59"
CASE_STUDY_END = "2018-01-27T02:24:00"

# Ranges used when sampling random conjunction geometries.
VEL_RATIO_RANGE = (0.98, 1.05)
APPROACH_ANGLE_RANGE = (math.radians(30.0), math.pi)
DT_TCA_RANGE_DAYS = (0.5, 1.8)


class InfeasibleGeometry(ValueError):
    """Raised when the requested conjunction cannot be flown by an elliptic debris orbit above the surface."""
    pass


@dataclass(frozen=True)
class ConjunctionSpec:
    dt_tca: float  # s after scenario start
    approach_angle: float  # rad, between target and debris velocity at TCA
    vel_ratio: float  # |v_debris| / |v_target| at TCA
    phase_offset: float = 0.0  # rad, servicer true anomaly minus target true anomaly

    def __post_init__(self):
        if not self.dt_tca > 0:
            raise ValueError(f"dt_tca must be positive, got {self.dt_tca}")
        if not self.vel_ratio > 0:
            raise ValueError(f"vel_ratio must be positive, got {self.vel_ratio}")
        if not all(math.isfinite(x) for x in (self.approach_angle, self.phase_offset)):
            raise ValueError("approach_angle and phase_offset must be finite")

    def as_dict(self) -> dict:
        return {"dt_tca_s": self.dt_tca, "approach_angle_rad": self.approach_angle,
                "vel_ratio": self.vel_ratio, "phase_offset_rad": self.phase_offset}

    @classmethod
    def from_dict(cls, data: dict) -> "ConjunctionSpec":
        return cls(float(data["dt_tca_s"]), float(data["approach_angle_rad"]), float(data["vel_ratio"]),
                   float(data.get("phase_offset_rad", 0.0)))


def _debris_velocity(state: CartesianState, spec: ConjunctionSpec) -> np.ndarray:
    # rotate within the plane spanned by the velocity and the orbit normal
    speed = float(np.linalg.norm(state.v))
    v_hat = state.v / speed
    h = state.angular_momentum()
    n_hat = h / np.linalg.norm(h)
    direction = math.cos(spec.approach_angle) * v_hat + math.sin(spec.approach_angle) * n_hat
    return spec.vel_ratio * speed * direction


def make_collision_scenario(target: KeplerianElements, spec: ConjunctionSpec, start: Epoch,
                            body: CentralBody = EARTH, end: Optional[Epoch] = None,
                            fuel_capacity: float = 1000.0, cov: CovarianceSpec = CovarianceSpec(),
                            name: str = "generated", provenance: Optional[dict] = None) -> Scenario:
    """
    Scenario whose unmaneuvered debris meets the target at start + spec.dt_tca.

    :raises InfeasibleGeometry: if the debris orbit would be non-elliptic, would dip
        below the central body's surface, or the collision falls after `end`.
    """
    end = end if end is not None else start.shifted(DEFAULT_WINDOW_DAYS * SECONDS_PER_DAY)
    tca = start.shifted(spec.dt_tca)
    if not tca < end:
        raise InfeasibleGeometry(f"Collision at {tca} is not before the scenario end {end}")

    target_now = propagate_elements(target, start, body) if target.epoch != start else target
    at_tca = propagate(target_now, tca, body)
    debris_state = CartesianState(at_tca.r, _debris_velocity(at_tca, spec), tca)
    try:
        debris_at_tca = state_to_elements(debris_state, body)
    except UnsupportedOrbit as exc:
        raise InfeasibleGeometry(f"vel_ratio {spec.vel_ratio} gives a non-elliptic debris orbit: {exc}") from exc
    periapsis = debris_at_tca.a * (1.0 - debris_at_tca.e)
    if periapsis <= body.radius:
        raise InfeasibleGeometry(f"Debris periapsis {periapsis:.1f} km lies below the surface ({body.radius} km)")

    debris = propagate_elements(debris_at_tca, start, body)
    servicer = target_now.with_true_anomaly(target_now.true_anom + spec.phase_offset, start)
    logger.debug(f"Generated {name}: collision at {tca.mjd2000:.6f}, debris a={debris.a:.3f} km e={debris.e:.6f}")
    return Scenario(
        target=target_now, servicer=servicer, debris=debris, start=start, end=end,
        fuel_capacity=fuel_capacity, cov=cov, tca_hint=tca, name=name,
        provenance={"conjunction_spec": spec.as_dict(), **(provenance or {})},
    )


def case_study_start() -> Epoch:
    return Epoch.from_iso(CASE_STUDY_START)


def case_study_scenario() -> Scenario:
    """Target (Pr), servicer (Sv) and debris (D) elements of the published case study."""
    start = case_study_start()
    return Scenario(
        target=KeplerianElements.from_degrees(7208.0, 7.5e-05, 324.5, 177.6, 174.3, 123.0, start),
        servicer=KeplerianElements.from_degrees(7208.0, 7.5e-05, 324.5, 177.6, 174.3, 135.0, start),
        debris=KeplerianElements.from_degrees(7213.0, 7.7e-05, 13.3, 234.3, 330.8, -15.0, start),
        start=start,
        end=Epoch.from_iso(CASE_STUDY_END),
        name="case-study",
        provenance={"source": "case-study"},
    )


def _published_table(rows) -> ActionTable:
    return ActionTable(tuple(Maneuver((dx, dy, dz), Epoch(t)) for dx, dy, dz, t in rows))


# Published optimal tables for the case study: random and Lambert initialization.
RANDOM_INIT_TABLE = _published_table([
    (0.99056, 1.42753, -0.1519, 6598.9000),
    (0.19245, 0.0368, 0.2128, 6598.9704),
    (0.93575, -0.2355, -0.0597, 6600.6005),
    (-0.93575, 0.2355, 0.0597, 6600.6710),
])
LAMBERT_INIT_TABLE = _published_table([
    (23.90, 32.94, 24.16, 6598.90),
    (-18.82, -35.11, -25.56, 6598.97),
    (0.00, -0.69, 0.22, 6600.53),
    (-0.00, 0.69, -0.22, 6600.60),
])


def random_conjunction_spec(rng: np.random.Generator, phase_offset: float = math.radians(12.0)) -> ConjunctionSpec:
    return ConjunctionSpec(
        dt_tca=float(rng.uniform(*DT_TCA_RANGE_DAYS)) * SECONDS_PER_DAY,
        approach_angle=float(rng.uniform(*APPROACH_ANGLE_RANGE)),
        vel_ratio=float(rng.uniform(*VEL_RATIO_RANGE)),
        phase_offset=phase_offset,
    )


def random_collision_scenario(seed: int, target: Optional[KeplerianElements] = None,
                              start: Optional[Epoch] = None, body: CentralBody = EARTH) -> Scenario:
    """Seeded random conjunction against the case-study target (by default); the seed is kept in the provenance."""
    rng = np.random.default_rng(seed)
    case = case_study_scenario()
    target = target if target is not None else case.target
    start = start if start is not None else case.start
    spec = random_conjunction_spec(rng)
    return make_collision_scenario(target, spec, start, body, name=f"random-{seed}", provenance={"seed": seed})
