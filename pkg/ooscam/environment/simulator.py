"""
Episode simulator: applies an action table to a scenario on the hybrid time
grid, tracks docking and the docked stack, assesses the conjunctions the
target actually flies through and scores the episode.
"""
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ooscam.astro.constants import EARTH, CentralBody
from ooscam.astro.elements import (CartesianState, InvalidElements, KeplerianElements, UnsupportedOrbit,
                                   state_to_elements)
from ooscam.astro.epoch import Epoch
from ooscam.astro.kepler import SolverFailure, orbital_period, propagate, propagate_many
from ooscam.conjunction.probability import (ConjunctionEvent, CovarianceError, EncounterModelInvalid,
                                            assess_conjunction)
from ooscam.conjunction.tca import DegenerateConjunction, find_conjunctions
from ooscam.environment.grid import TimeGrid, build_time_grid
from ooscam.environment.rewards import (ElementDeviation, EpisodeMetrics, RewardBreakdown, piecewise_penalty,
                                        reward_deviation, reward_fuel, reward_pc, reward_total)
from ooscam.environment.types import (ActionTable, GridConfig, Maneuver, RewardThresholds, RewardWeights,
                                      Scenario)

STATE_AXES = ("x_km", "y_km", "z_km", "vx_kms", "vy_kms", "vz_kms")
TRACE_COLUMNS = (
    ("t_mjd2000", "t_days", "fine", "docked", "fuel_remaining", "pc", "reward",
     "rel_distance_m", "rel_speed_mps", "dev_a_m", "dev_e", "dev_i_rad", "dev_raan_rad", "dev_argp_rad")
    + tuple(f"servicer_{axis}" for axis in STATE_AXES)
    + tuple(f"target_{axis}" for axis in STATE_AXES)
    + tuple(f"debris_{axis}" for axis in STATE_AXES)
)

class SubsurfaceOrbit(ValueError):
    """Raised when a burn leaves the servicer or the docked stack with its periapsis below the surface."""
    pass


# Numerical problems that end an episode with the sentinel reward instead of an exception.
EPISODE_FAILURES = (SolverFailure, UnsupportedOrbit, SubsurfaceOrbit, InvalidElements, DegenerateConjunction,
                    EncounterModelInvalid, CovarianceError, ArithmeticError)


def apply_maneuver(state: CartesianState, maneuver: Maneuver, fuel: float) -> Tuple[CartesianState, float]:
    """Adds the burn's delta-v [m/s] to the state velocity and debits |dv| units of fuel."""
    dv = np.asarray(maneuver.dv, dtype=float) / 1000.0
    return CartesianState(state.r, state.v + dv, state.epoch), fuel - maneuver.magnitude


def docking_check(rel_pos_m, rel_vel_mps, thr: RewardThresholds):
    """Docked when both the relative distance [m] and the relative speed [m/s] are within thresholds."""
    docked = (np.asarray(rel_pos_m, dtype=float) <= thr.dock_pos) & (np.asarray(rel_vel_mps, dtype=float) <= thr.dock_vel)
    return bool(docked) if np.ndim(docked) == 0 else docked


@dataclass(frozen=True, eq=False)
class SimTrace:
    """Per grid point record of an episode. Arrays are read-only; state blocks are (N, 6) [km, km/s]."""

    t_mjd2000: np.ndarray
    fine: np.ndarray
    docked: np.ndarray
    fuel: np.ndarray
    pc: np.ndarray
    reward: np.ndarray
    rel_distance_m: np.ndarray
    rel_speed_mps: np.ndarray
    deviation: np.ndarray
    servicer: np.ndarray
    target: np.ndarray
    debris: np.ndarray
    t_dock: Optional[Epoch] = None
    tca: Optional[Epoch] = None
    conjunctions: Tuple[ConjunctionEvent, ...] = ()
    metrics: Optional[EpisodeMetrics] = None
    failed: bool = False
    failure_reason: str = ""

    def __post_init__(self):
        for name in ("t_mjd2000", "fine", "docked", "fuel", "pc", "reward", "rel_distance_m", "rel_speed_mps",
                     "deviation", "servicer", "target", "debris"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return len(self.t_mjd2000)

    @classmethod
    def failure(cls, reason: str) -> "SimTrace":
        empty = np.zeros(0)
        return cls(
            t_mjd2000=empty.copy(), fine=np.zeros(0, dtype=bool), docked=np.zeros(0, dtype=bool), fuel=empty.copy(),
            pc=empty.copy(), reward=empty.copy(), rel_distance_m=empty.copy(), rel_speed_mps=empty.copy(),
            deviation=np.zeros((0, 5)), servicer=np.zeros((0, 6)), target=np.zeros((0, 6)), debris=np.zeros((0, 6)),
            failed=True, failure_reason=reason,
        )

    def rows(self) -> Iterator[list]:
        """Trace rows in TRACE_COLUMNS order; t_days counts from the first grid point."""
        if not len(self):
            return
        t0 = self.t_mjd2000[0]
        for k in range(len(self)):
            yield [
                float(self.t_mjd2000[k]), float(self.t_mjd2000[k] - t0), int(self.fine[k]), int(self.docked[k]),
                float(self.fuel[k]), float(self.pc[k]), float(self.reward[k]),
                float(self.rel_distance_m[k]), float(self.rel_speed_mps[k]),
                *(float(x) for x in self.deviation[k]),
                *(float(x) for x in self.servicer[k]),
                *(float(x) for x in self.target[k]),
                *(float(x) for x in self.debris[k]),
            ]


@dataclass
class _TargetArc:
    elements: KeplerianElements
    start: Epoch
    predicted: List[ConjunctionEvent] = field(default_factory=list)


class _EpisodeRunner:
    """Single-use state machine that fills the trace segment by segment between burn epochs."""

    def __init__(self, scenario: Scenario, table: ActionTable, thr: RewardThresholds, grid_cfg: GridConfig,
                 weights: RewardWeights, body: CentralBody):
        self.scenario = scenario
        self.table = table
        self.thr = thr
        self.grid_cfg = grid_cfg
        self.weights = weights
        self.body = body
        self.grid: TimeGrid = build_time_grid(scenario, table, grid_cfg.fine_step, grid_cfg.coarse_step,
                                              grid_cfg.fine_window, grid_cfg.skip_step)
        n = len(self.grid)
        self.servicer = np.zeros((n, 6))
        self.target = np.zeros((n, 6))
        self.docked = np.zeros(n, dtype=bool)
        self.fuel = np.zeros(n)
        self.fuel_used = np.zeros(n)
        self.arc_index = np.zeros(n, dtype=int)

        self.arcs = [_TargetArc(scenario.target, scenario.start)]
        self.servicer_el = scenario.servicer
        self.dock_index: Optional[int] = None
        self.pre_dock = (0.0, 0.0)
        self.remaining = scenario.fuel_capacity
        self.used = 0.0

    def _burn_groups(self) -> List[Tuple[int, List[Maneuver]]]:
        groups = {}
        for m in self.table.rows:
            groups.setdefault(self.grid.index_of(m.t.mjd2000), []).append(m)
        return sorted(groups.items())

    def _burn(self, idx: int, maneuvers: Sequence[Maneuver]) -> None:
        epoch = Epoch(float(self.grid.mjd2000[idx]))
        stack = self.dock_index is not None
        orbit = self.arcs[-1].elements if stack else self.servicer_el
        state = propagate(orbit, epoch, self.body)
        for m in maneuvers:
            state, self.remaining = apply_maneuver(state, m, self.remaining)
            self.used += m.magnitude
        new_orbit = state_to_elements(state, self.body)
        periapsis = new_orbit.a * (1.0 - new_orbit.e)
        if periapsis <= self.body.radius:
            raise SubsurfaceOrbit(f"Periapsis {periapsis:.1f} km after the burn at {epoch.mjd2000:.8f}")
        if stack:
            self.arcs.append(_TargetArc(new_orbit, epoch))
        self.servicer_el = new_orbit
        logger.debug(f"Burn at {epoch.mjd2000:.8f} on {'stack' if stack else 'servicer'}: "
                     f"{sum(m.magnitude for m in maneuvers):.4f} m/s, fuel left {self.remaining:.4f}")

    def _fill(self, lo: int, hi: int) -> None:
        epochs = self.grid.mjd2000[lo:hi]
        r_t, v_t = propagate_many(self.arcs[-1].elements, epochs, self.body)
        self.target[lo:hi] = np.hstack([r_t, v_t])
        self.arc_index[lo:hi] = len(self.arcs) - 1
        self.fuel[lo:hi] = self.remaining
        self.fuel_used[lo:hi] = self.used
        if self.dock_index is not None:
            self.servicer[lo:hi] = self.target[lo:hi]
            self.docked[lo:hi] = True
            return

        r_s, v_s = propagate_many(self.servicer_el, epochs, self.body)
        self.servicer[lo:hi] = np.hstack([r_s, v_s])
        distance = np.linalg.norm(r_s - r_t, axis=1) * 1000.0
        speed = np.linalg.norm(v_s - v_t, axis=1) * 1000.0
        hits = np.flatnonzero(self.grid.fine[lo:hi] & docking_check(distance, speed, self.thr))
        if len(hits):
            k = lo + int(hits[0])
            self.dock_index = k
            self.pre_dock = (float(distance[hits[0]]), float(speed[hits[0]]))
            self.servicer[k:hi] = self.target[k:hi]
            self.docked[k:hi] = True
            self.servicer_el = self.arcs[-1].elements
            logger.debug(f"Docked at {self.grid.mjd2000[k]:.8f} ({self.pre_dock[0]:.2f} m, {self.pre_dock[1]:.3f} m/s)")

    def _assess_arcs(self) -> List[ConjunctionEvent]:
        experienced: List[ConjunctionEvent] = []
        for j, arc in enumerate(self.arcs):
            arc_end = self.arcs[j + 1].start if j + 1 < len(self.arcs) else self.scenario.end
            if not arc.start < self.scenario.end:
                continue
            approaches = find_conjunctions(arc.elements, self.scenario.debris, (arc.start, self.scenario.end),
                                           self.body, scan_step=self.grid_cfg.scan_step,
                                           screen_distance=self.grid_cfg.screen_distance, include_boundaries=True)
            arc.predicted = [assess_conjunction(a.state_a, a.state_b, self.scenario.cov) for a in approaches]
            experienced.extend(e for e in arc.predicted if arc.start <= e.tca <= arc_end)
        return experienced

    def _forward_pc(self) -> np.ndarray:
        pc = np.zeros(len(self.grid))
        for j, arc in enumerate(self.arcs):
            for event in arc.predicted:
                mask = (self.arc_index == j) & (self.grid.mjd2000 <= event.tca.mjd2000)
                pc[mask] = np.maximum(pc[mask], event.pc)
        return pc

    def run(self) -> SimTrace:
        n = len(self.grid)
        groups = dict(self._burn_groups())
        starts = sorted(set([0]) | set(groups))
        for lo, hi in zip(starts, starts[1:] + [n]):
            if lo in groups:
                self._burn(lo, groups[lo])
            if hi > lo:
                self._fill(lo, hi)

        r_d, v_d = propagate_many(self.scenario.debris, self.grid.mjd2000, self.body)
        debris = np.hstack([r_d, v_d])
        rel_distance = np.linalg.norm(self.servicer[:, :3] - self.target[:, :3], axis=1) * 1000.0
        rel_speed = np.linalg.norm(self.servicer[:, 3:] - self.target[:, 3:], axis=1) * 1000.0

        arc_deviation = [ElementDeviation.between(self.scenario.target, arc.elements) for arc in self.arcs]
        experienced = self._assess_arcs()
        pc_forward = self._forward_pc()
        deviation = np.array([d.as_tuple() for d in arc_deviation])[self.arc_index]

        open_distance = np.where(self.docked, 0.0, rel_distance)
        open_speed = np.where(self.docked, 0.0, rel_speed)
        w, thr = self.weights, self.thr
        reward = (reward_pc(pc_forward, thr, w)
                  + reward_fuel(self.fuel_used, self.fuel, thr, w)
                  + reward_deviation(deviation, thr, w)
                  + piecewise_penalty(open_distance, thr.dock_pos, w.w_dock_pos, w.steepness)
                  + piecewise_penalty(open_speed, thr.dock_vel, w.w_dock_vel, w.steepness))

        t_dock = None if self.dock_index is None else Epoch(float(self.grid.mjd2000[self.dock_index]))
        if t_dock is None:
            closest = int(np.argmin(rel_distance))
            dock_distance, dock_speed = float(rel_distance[closest]), float(rel_speed[closest])
        else:
            dock_distance, dock_speed = self.pre_dock

        worst = max(experienced, key=lambda e: (e.pc, -e.miss_distance), default=None)
        metrics = EpisodeMetrics(
            pc=worst.pc if worst is not None else 0.0,
            fuel_used=self.used,
            fuel_remaining=self.remaining,
            deviation=arc_deviation[-1],
            dock_distance_m=dock_distance,
            dock_speed_mps=dock_speed,
            docked=t_dock is not None,
            t_dock=t_dock,
            n_conjunctions=len(experienced),
        )
        return SimTrace(
            t_mjd2000=self.grid.mjd2000.copy(), fine=self.grid.fine.copy(), docked=self.docked, fuel=self.fuel,
            pc=pc_forward, reward=np.asarray(reward, dtype=float), rel_distance_m=rel_distance,
            rel_speed_mps=rel_speed, deviation=deviation, servicer=self.servicer, target=self.target, debris=debris,
            t_dock=t_dock, tca=worst.tca if worst is not None else self.scenario.tca_hint,
            conjunctions=tuple(experienced), metrics=metrics,
        )


def run_episode(scenario: Scenario, table: ActionTable, thr: RewardThresholds = RewardThresholds(),
                grid: GridConfig = GridConfig(), weights: RewardWeights = RewardWeights(),
                body: CentralBody = EARTH) -> Tuple[SimTrace, RewardBreakdown]:
    """
    Simulates one episode and scores it.

    Burns act on the servicer until it docks and on the docked stack afterwards.
    The state stored at a burn epoch is the post-burn state. A numerical failure
    yields a trace flagged `failed` and the sentinel reward.

    :raises InvalidActionTable: if a maneuver lies outside the scenario window.
    """
    table.check_window(scenario.start, scenario.end)
    try:
        trace = _EpisodeRunner(scenario, table, thr, grid, weights, body).run()
    except EPISODE_FAILURES as exc:
        reason = f"{type(exc).__name__}: {exc}"
        logger.warning(f"Episode on {scenario.name} failed, scoring {weights.failure_reward:g}: {reason}")
        return SimTrace.failure(reason), RewardBreakdown.failure(weights.failure_reward)

    breakdown = reward_total(trace.metrics, thr, weights)
    logger.debug(f"Episode on {scenario.name}: {len(trace)} points, pc={trace.metrics.pc:.3e}, "
                 f"fuel={trace.metrics.fuel_used:.3f}, docked={trace.metrics.docked}, reward={breakdown.total:.4f}")
    return trace, breakdown


def docking_time_in_periods(scenario: Scenario, table: ActionTable, t_dock: Optional[Epoch],
                            body: CentralBody = EARTH) -> Optional[float]:
    """Time from the first burn to docking, in target orbital periods; None if never docked."""
    if t_dock is None:
        return None
    return t_dock.seconds_since(table.rows[0].t) / orbital_period(scenario.target.a, body)
