"""
Episode reward: five penalty components (collision probability, fuel, target
deviation, docking distance, docking speed), each <= 0, summed into the total.
"""
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ooscam.astro.elements import KeplerianElements, angle_difference
from ooscam.astro.epoch import Epoch
from ooscam.environment.types import RewardThresholds, RewardWeights

ArrayLike = Union[float, np.ndarray]
PC_FLOOR = 1e-30
# Below this eccentricity the periapsis direction is weighted down by e / ECC_FLOOR.
ECC_FLOOR = 0.1


def elu(z: ArrayLike) -> ArrayLike:
    z = np.asarray(z, dtype=float)
    return np.where(z > 0.0, z, np.expm1(np.minimum(z, 0.0)))


def reward_pc(pc: ArrayLike, thr: RewardThresholds, weights: RewardWeights = RewardWeights()) -> ArrayLike:
    """
    ELU-shaped collision-probability penalty on a log10 scale around p_t:
    -w_p at p_t, tending to 0 as pc -> 0 and growing with slope elu_slope per decade above p_t.
    """
    x = np.log10(np.maximum(np.asarray(pc, dtype=float), PC_FLOOR) / thr.p_t)
    value = -weights.w_p * (elu(weights.elu_slope * x) + 1.0)
    return float(value) if np.ndim(value) == 0 else value


def piecewise_penalty(x: ArrayLike, threshold: float, weight: float, steepness: float) -> ArrayLike:
    """-weight * x/threshold up to the threshold, then steeper by `steepness`; continuous at the knee."""
    ratio = np.asarray(x, dtype=float) / threshold
    value = np.where(ratio <= 1.0, -weight * ratio, -weight * (1.0 + steepness * (ratio - 1.0)))
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class ElementDeviation:
    """
    Target orbit deviation from its pre-mission elements.
    `argp` is the periapsis angle change scaled by min(1, e / ECC_FLOOR) with the
    smaller of the two eccentricities, so it vanishes as either orbit turns circular.
    """

    a_m: float = 0.0
    e: float = 0.0
    i: float = 0.0
    raan: float = 0.0
    argp: float = 0.0

    @classmethod
    def between(cls, reference: KeplerianElements, current: KeplerianElements) -> "ElementDeviation":
        ref, cur = reference.canonical(), current.canonical()
        return cls(
            a_m=abs(cur.a - ref.a) * 1000.0,
            e=abs(cur.e - ref.e),
            i=angle_difference(cur.i, ref.i),
            raan=angle_difference(cur.raan, ref.raan),
            argp=angle_difference(cur.argp, ref.argp) * min(1.0, min(ref.e, cur.e) / ECC_FLOOR),
        )

    def as_tuple(self):
        return self.a_m, self.e, self.i, self.raan, self.argp

    def within(self, thr: RewardThresholds) -> bool:
        limits = (thr.dev_a, thr.dev_e, thr.dev_i, thr.dev_raan, thr.dev_argp)
        return all(value <= limit for value, limit in zip(self.as_tuple(), limits))


@dataclass(frozen=True)
class EpisodeMetrics:
    pc: float
    fuel_used: float  # units
    fuel_remaining: float
    deviation: ElementDeviation
    dock_distance_m: float
    dock_speed_mps: float
    docked: bool
    t_dock: Optional[Epoch] = None
    n_conjunctions: int = 0


@dataclass(frozen=True)
class RewardBreakdown:
    r_pc: float
    r_fuel: float
    r_dev: float
    r_dock_pos: float
    r_dock_vel: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.r_pc + self.r_fuel + self.r_dev + self.r_dock_pos + self.r_dock_vel)

    @classmethod
    def failure(cls, sentinel: float) -> "RewardBreakdown":
        return cls(r_pc=sentinel, r_fuel=0.0, r_dev=0.0, r_dock_pos=0.0, r_dock_vel=0.0)

    def as_dict(self) -> dict:
        return {"r_pc": self.r_pc, "r_fuel": self.r_fuel, "r_dev": self.r_dev,
                "r_dock_pos": self.r_dock_pos, "r_dock_vel": self.r_dock_vel, "total": self.total}


def reward_fuel(fuel_used: ArrayLike, fuel_remaining: ArrayLike, thr: RewardThresholds,
                weights: RewardWeights) -> ArrayLike:
    # an overdrawn tank costs another steep slope on top of the usage penalty
    overdraw = np.maximum(-np.asarray(fuel_remaining, dtype=float), 0.0)
    value = (piecewise_penalty(fuel_used, thr.fuel, weights.w_f, weights.steepness)
             - weights.w_f * weights.steepness * overdraw / thr.fuel)
    return float(value) if np.ndim(value) == 0 else value


def reward_deviation(deviation, thr: RewardThresholds, weights: RewardWeights) -> ArrayLike:
    """`deviation` is an ElementDeviation or an (N, 5) array in the same column order."""
    values = np.asarray(deviation.as_tuple() if isinstance(deviation, ElementDeviation) else deviation, dtype=float)
    limits = (thr.dev_a, thr.dev_e, thr.dev_i, thr.dev_raan, thr.dev_argp)
    total = sum(piecewise_penalty(values[..., k], limits[k], weights.w_d, weights.steepness) for k in range(5))
    return float(total) if np.ndim(total) == 0 else total


def reward_total(metrics: EpisodeMetrics, thr: RewardThresholds,
                 weights: RewardWeights = RewardWeights()) -> RewardBreakdown:
    dock_distance = 0.0 if metrics.docked else metrics.dock_distance_m
    dock_speed = 0.0 if metrics.docked else metrics.dock_speed_mps
    return RewardBreakdown(
        r_pc=reward_pc(metrics.pc, thr, weights),
        r_fuel=reward_fuel(metrics.fuel_used, metrics.fuel_remaining, thr, weights),
        r_dev=reward_deviation(metrics.deviation, thr, weights),
        r_dock_pos=piecewise_penalty(dock_distance, thr.dock_pos, weights.w_dock_pos, weights.steepness),
        r_dock_vel=piecewise_penalty(dock_speed, thr.dock_vel, weights.w_dock_vel, weights.steepness),
    )
