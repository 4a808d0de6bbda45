"""Scenario, action-table and configuration types consumed by the episode simulator."""
from dataclasses import asdict, dataclass, field
import math
from typing import Optional, Tuple

import numpy as np

from ooscam.astro.elements import KeplerianElements
from ooscam.astro.epoch import Epoch
from ooscam.conjunction.probability import CovarianceSpec

ROWS = 4
PARAMS_PER_ROW = 4  # dv_x, dv_y, dv_z [m/s], t [mjd2000]
DOCKING_ROWS = (0, 1)
CAM_ROWS = (2, 3)


class InvalidActionTable(ValueError):
    """Raised when an action table has the wrong shape, unordered times or times outside the scenario window."""
    pass


@dataclass(frozen=True)
class Maneuver:
    """Impulsive burn: inertial delta-v [m/s] applied at epoch t."""

    dv: Tuple[float, float, float]
    t: Epoch

    def __post_init__(self):
        dv = tuple(float(x) for x in self.dv)
        if len(dv) != 3 or not all(math.isfinite(x) for x in dv):
            raise InvalidActionTable(f"Maneuver delta-v must be three finite numbers, got {self.dv}")
        object.__setattr__(self, "dv", dv)

    @property
    def magnitude(self) -> float:
        return math.hypot(*self.dv)


@dataclass(frozen=True)
class ActionTable:
    """Four time-ordered burns: rows 1-2 dock with the target, rows 3-4 perform the CAM and return."""

    rows: Tuple[Maneuver, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        if len(rows) != ROWS:
            raise InvalidActionTable(f"Action table needs exactly {ROWS} rows, got {len(rows)}")
        times = [m.t.mjd2000 for m in rows]
        if any(later < earlier for earlier, later in zip(times, times[1:])):
            raise InvalidActionTable(f"Maneuver times must be nondecreasing, got {times}")
        object.__setattr__(self, "rows", rows)

    def check_window(self, start: Epoch, end: Epoch) -> None:
        for idx, m in enumerate(self.rows, start=1):
            if not start <= m.t <= end:
                raise InvalidActionTable(f"Row {idx} at {m.t.mjd2000} lies outside the scenario window "
                                         f"[{start.mjd2000}, {end.mjd2000}]")

    def to_vector(self) -> np.ndarray:
        return np.array([[*m.dv, m.t.mjd2000] for m in self.rows], dtype=float).reshape(-1)

    @classmethod
    def from_vector(cls, params) -> "ActionTable":
        params = np.asarray(params, dtype=float).reshape(ROWS, PARAMS_PER_ROW)
        return cls(tuple(Maneuver((row[0], row[1], row[2]), Epoch(float(row[3]))) for row in params))

    @property
    def total_dv(self) -> float:
        return sum(m.magnitude for m in self.rows)

    def docking_dv(self) -> float:
        return sum(self.rows[i].magnitude for i in DOCKING_ROWS)

    def cam_dv(self) -> float:
        return sum(self.rows[i].magnitude for i in CAM_ROWS)


@dataclass(frozen=True)
class RewardThresholds:
    p_t: float = 1e-4
    fuel: float = 500.0  # units, 1 unit = 1 m/s of delta-v
    dev_a: float = 100.0  # m
    dev_e: float = 0.01
    dev_i: float = 0.01  # rad
    dev_raan: float = 0.01  # rad
    dev_argp: float = 0.01  # rad
    dock_pos: float = 250.0  # m
    dock_vel: float = 5.0  # m/s

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"Threshold {name} must be positive, got {value}")


@dataclass(frozen=True)
class RewardWeights:
    w_p: float = 1000.0
    w_f: float = 10.0
    w_d: float = 10.0  # per element
    w_dock_pos: float = 10.0
    w_dock_vel: float = 10.0
    steepness: float = 10.0  # slope multiplier above a threshold
    elu_slope: float = 2.0
    failure_reward: float = -1e12


@dataclass(frozen=True)
class GridConfig:
    fine_step: float = 0.08  # s
    coarse_step: float = 10.0  # s
    fine_window: float = 60.0  # s, half-width around maneuvers and the predicted dock
    skip_step: Optional[float] = 60.0  # s, spacing between the docking phase and the CAM
    scan_step: float = 10.0  # s, conjunction scan
    screen_distance: float = 10.0  # km, conjunctions farther than this are not refined

    def __post_init__(self):
        if not 0 < self.fine_step < self.coarse_step:
            raise ValueError(f"Need 0 < fine_step < coarse_step, got {self.fine_step}, {self.coarse_step}")
        if not self.fine_window > 0:
            raise ValueError(f"fine_window must be positive, got {self.fine_window}")
        if self.skip_step is not None and not self.skip_step > 0:
            raise ValueError(f"skip_step must be positive, got {self.skip_step}")
        if not (self.scan_step > 0 and self.screen_distance > 0):
            raise ValueError("scan_step and screen_distance must be positive")


@dataclass(frozen=True)
class Scenario:
    """Target (Pr), servicer (Sv) and debris (D) orbits with the episode window and risk settings."""

    target: KeplerianElements
    servicer: KeplerianElements
    debris: KeplerianElements
    start: Epoch
    end: Epoch
    fuel_capacity: float = 1000.0
    cov: CovarianceSpec = field(default_factory=CovarianceSpec)
    tca_hint: Optional[Epoch] = None
    name: str = "scenario"
    provenance: Optional[dict] = None

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"Scenario start {self.start} must precede end {self.end}")
        if not self.fuel_capacity > 0:
            raise ValueError(f"Fuel capacity must be positive, got {self.fuel_capacity}")

    @property
    def duration(self) -> float:
        return self.end.seconds_since(self.start)
