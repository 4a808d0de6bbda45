import numpy as np
import pytest

from ooscam.astro.elements import CartesianState, state_to_elements
from ooscam.astro.kepler import orbital_period, propagate
from ooscam.environment.simulator import run_episode
from ooscam.scenarios.generator import ConjunctionSpec, make_collision_scenario
from ooscam.training.initializers import init_lambert, init_random

DAY = 86400.0


def test_random_init_is_seeded_and_bounded(case_study):
    table = init_random(case_study, seed=5)
    assert table == init_random(case_study, seed=5)
    assert table != init_random(case_study, seed=6)
    table.check_window(case_study.start, case_study.end)
    assert all(abs(x) <= 2.0 for m in table.rows for x in m.dv)
    times = [m.t.mjd2000 for m in table.rows]
    assert times == sorted(times)


def test_random_init_without_burns(case_study):
    assert init_random(case_study, seed=1, dv_max=0.0).total_dv == 0.0
    with pytest.raises(ValueError):
        init_random(case_study, seed=1, dv_max=-1.0)


def test_lambert_init_docks_on_the_case_study(case_study):
    t1 = case_study.start
    t2 = t1.shifted(0.0704 * DAY)
    table = init_lambert(case_study, t1, t2, seed=0)
    assert table.rows[0].t == t1
    assert table.rows[1].t == t2
    assert 10.0 < table.rows[0].magnitude < 150.0
    assert all(t2 <= m.t <= case_study.end for m in table.rows[2:])

    trace, _ = run_episode(case_study, table)
    assert not trace.failed
    assert trace.metrics.docked
    assert trace.t_dock is not None
    assert abs(trace.t_dock.seconds_since(t2)) < 1.0


def test_lambert_rows_reach_the_target(case_study):
    t1 = case_study.start.shifted(600.0)
    t2 = t1.shifted(3000.0)
    table = init_lambert(case_study, t1, t2, seed=0)
    servicer = propagate(case_study.servicer, t1)
    dv = np.array(table.rows[0].dv) / 1000.0
    transfer = state_to_elements(CartesianState(servicer.r, servicer.v + dv, t1))
    arrival = propagate(transfer, t2)
    target = propagate(case_study.target, t2)
    assert np.linalg.norm(arrival.r - target.r) < 1e-3
    np.testing.assert_allclose(arrival.v + np.array(table.rows[1].dv) / 1000.0, target.v, atol=1e-8)


def test_co_located_servicer_needs_no_transfer(case_study):
    spec = ConjunctionSpec(dt_tca=0.8 * DAY, approach_angle=1.0, vel_ratio=1.0, phase_offset=0.0)
    scenario = make_collision_scenario(case_study.target, spec, case_study.start)
    t2 = scenario.start.shifted(orbital_period(scenario.target.a))
    table = init_lambert(scenario, scenario.start, t2, seed=0)
    assert table.rows[0].magnitude < 1e-3
    assert table.rows[1].magnitude < 1e-3


@pytest.mark.parametrize("offsets", [(-60.0, 600.0), (600.0, 600.0), (600.0, 300.0)])
def test_lambert_init_rejects_bad_epochs(case_study, offsets):
    t1 = case_study.start.shifted(offsets[0])
    t2 = case_study.start.shifted(offsets[1])
    with pytest.raises(ValueError):
        init_lambert(case_study, t1, t2, seed=0)
