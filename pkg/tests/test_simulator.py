import math

import numpy as np
import pytest

from ooscam.astro.elements import CartesianState
from ooscam.astro.kepler import orbital_period, propagate
from ooscam.environment.rewards import ElementDeviation
from ooscam.environment.simulator import (TRACE_COLUMNS, apply_maneuver, docking_check, docking_time_in_periods,
                                          run_episode)
from ooscam.environment.types import ActionTable, GridConfig, InvalidActionTable, Maneuver, RewardThresholds
from ooscam.scenarios.generator import LAMBERT_INIT_TABLE, RANDOM_INIT_TABLE, ConjunctionSpec, make_collision_scenario

from conftest import START, coast_table

DAY = 86400.0
THR = RewardThresholds()


@pytest.fixture(scope="module")
def table2_episode(case_study):
    return run_episode(case_study, RANDOM_INIT_TABLE)


@pytest.fixture(scope="module")
def co_located_scenario(case_study):
    # servicer starts on the target; the debris is faster so the collision does not repeat every period
    spec = ConjunctionSpec(dt_tca=0.8 * DAY, approach_angle=math.pi / 2, vel_ratio=1.03, phase_offset=0.0)
    return make_collision_scenario(case_study.target, spec, case_study.start, name="co-located")


def along_track(scenario, epoch, dv_mps):
    v = propagate(scenario.target, epoch).v
    return tuple(dv_mps * v / np.linalg.norm(v))


def test_apply_maneuver_adds_velocity_and_debits_fuel():
    state = CartesianState([7000.0, 0.0, 0.0], [0.0, 7.5, 0.0], START)
    after, fuel = apply_maneuver(state, Maneuver((3.0, 4.0, 0.0), START), 10.0)
    np.testing.assert_allclose(after.v, [0.003, 7.504, 0.0])
    np.testing.assert_array_equal(after.r, state.r)
    assert fuel == pytest.approx(5.0)


def test_docking_check_needs_both_thresholds():
    assert docking_check(250.0, 5.0, THR)
    assert not docking_check(251.0, 1.0, THR)
    assert not docking_check(10.0, 5.1, THR)
    np.testing.assert_array_equal(docking_check(np.array([0.0, 300.0]), np.array([0.0, 0.0]), THR), [True, False])


def test_unmaneuvered_collision_is_penalized(collision_scenario):
    trace, breakdown = run_episode(collision_scenario, coast_table(collision_scenario.start))
    assert not trace.failed
    assert trace.metrics.pc > THR.p_t
    assert trace.metrics.pc == pytest.approx(0.0025, rel=0.05)
    assert breakdown.total < -1000.0
    assert not trace.metrics.docked
    assert trace.metrics.fuel_used == 0.0
    assert any(abs(e.tca.seconds_since(collision_scenario.tca_hint)) < 1.0 for e in trace.conjunctions)
    # single target arc: the risk ahead never grows
    assert np.all(np.diff(trace.pc) <= 0.0)
    assert trace.pc[0] == trace.metrics.pc


def test_docked_cam_and_return_outscore_coasting_into_the_collision(co_located_scenario):
    scenario = co_located_scenario
    t_cam = scenario.tca_hint.shifted(-0.3 * DAY)
    t_back = scenario.tca_hint.shifted(0.1 * DAY)
    table = ActionTable((
        Maneuver((0.0, 0.0, 0.0), scenario.start),
        Maneuver((0.0, 0.0, 0.0), scenario.start),
        Maneuver(along_track(scenario, t_cam, 1.0), t_cam),
        Maneuver(along_track(scenario, t_back, -1.0), t_back),
    ))
    trace, breakdown = run_episode(scenario, table)
    coast, coast_breakdown = run_episode(scenario, coast_table(scenario.start))

    assert coast.metrics.pc > THR.p_t
    assert trace.metrics.docked
    assert trace.t_dock == scenario.start
    assert trace.docked.all()
    np.testing.assert_array_equal(trace.servicer, trace.target)
    assert trace.metrics.pc < THR.p_t
    assert trace.metrics.fuel_used == pytest.approx(2.0)
    assert trace.metrics.deviation.within(THR)
    assert breakdown.total > -100.0
    assert breakdown.total > coast_breakdown.total
    assert breakdown.r_dock_pos == 0.0 and breakdown.r_dock_vel == 0.0
    assert docking_time_in_periods(scenario, table, trace.t_dock) == 0.0


def test_published_random_table(case_study, table2_episode):
    trace, breakdown = table2_episode
    assert not trace.failed
    assert trace.metrics.pc < THR.p_t
    assert trace.metrics.fuel_used == pytest.approx(RANDOM_INIT_TABLE.total_dv)
    assert trace.metrics.fuel_remaining == pytest.approx(case_study.fuel_capacity - RANDOM_INIT_TABLE.total_dv)
    assert not trace.metrics.docked
    assert trace.metrics.deviation.a_m == 0.0
    assert docking_time_in_periods(case_study, RANDOM_INIT_TABLE, trace.t_dock) is None
    assert breakdown.total < 0.0


def test_post_burn_state_is_stored_at_burn_epoch(case_study, table2_episode):
    trace, _ = table2_episode
    first = RANDOM_INIT_TABLE.rows[0]
    k = int(np.searchsorted(trace.t_mjd2000, first.t.mjd2000))
    assert trace.t_mjd2000[k] == first.t.mjd2000
    coasting = propagate(case_study.servicer, first.t)
    np.testing.assert_allclose(trace.servicer[k, 3:], coasting.v + np.array(first.dv) / 1000.0, atol=1e-8)
    np.testing.assert_allclose(trace.servicer[k, :3], coasting.r, atol=1e-6)
    assert trace.fuel[k] == pytest.approx(case_study.fuel_capacity - first.magnitude)
    assert trace.fuel[k - 1] == case_study.fuel_capacity


def test_trace_rows_follow_columns(table2_episode):
    trace, _ = table2_episode
    rows = list(trace.rows())
    assert len(rows) == len(trace)
    assert all(len(row) == len(TRACE_COLUMNS) for row in rows[:10])
    assert rows[0][1] == 0.0
    assert np.all(np.diff(trace.t_mjd2000) > 0)


def test_coarse_step_has_little_effect(case_study, table2_episode):
    _, reference = table2_episode
    _, halved = run_episode(case_study, RANDOM_INIT_TABLE, grid=GridConfig(coarse_step=5.0))
    assert halved.total == pytest.approx(reference.total, rel=0.01)


def test_hyperbolic_burn_fails_the_episode(case_study):
    rows = list(coast_table(case_study.start).rows)
    rows[0] = Maneuver((20000.0, 0.0, 0.0), case_study.start)
    trace, breakdown = run_episode(case_study, ActionTable(tuple(rows)))
    assert trace.failed
    assert "UnsupportedOrbit" in trace.failure_reason
    assert len(trace) == 0
    assert breakdown.total == -1e12


def test_burn_below_the_surface_fails_the_episode(case_study):
    rows = list(coast_table(case_study.start).rows)
    v = propagate(case_study.servicer, case_study.start).v
    rows[0] = Maneuver(tuple(-1000.0 * v / np.linalg.norm(v)), case_study.start)
    trace, breakdown = run_episode(case_study, ActionTable(tuple(rows)))
    assert trace.failed
    assert "SubsurfaceOrbit" in trace.failure_reason
    assert breakdown.total == -1e12


def test_table_outside_window_is_rejected(case_study):
    with pytest.raises(InvalidActionTable):
        run_episode(case_study, coast_table(case_study.end.shifted(60.0)))


def test_docking_time_in_periods(case_study):
    table = coast_table(case_study.start)
    later = case_study.start.shifted(orbital_period(case_study.target.a) * 1.5)
    assert docking_time_in_periods(case_study, table, later) == pytest.approx(1.5)


def test_published_lambert_table_never_reaches_the_target(case_study):
    # inertial burns: the published docking burns miss the target by over a thousand km
    trace, _ = run_episode(case_study, LAMBERT_INIT_TABLE)
    assert not trace.failed
    assert not trace.metrics.docked
    assert trace.metrics.dock_distance_m > 1e6
    assert trace.metrics.deviation == ElementDeviation()
    assert trace.metrics.deviation.within(THR)
    assert trace.metrics.pc < THR.p_t
    assert trace.metrics.fuel_used == pytest.approx(LAMBERT_INIT_TABLE.total_dv)
