import numpy as np
import pytest

from ooscam.astro.constants import SECONDS_PER_DAY
from ooscam.astro.epoch import Epoch
from ooscam.environment.grid import build_time_grid
from ooscam.environment.types import ActionTable, GridConfig, Maneuver
from ooscam.scenarios.generator import LAMBERT_INIT_TABLE, RANDOM_INIT_TABLE

CFG = GridConfig()


@pytest.fixture(scope="module")
def lambert_grid(case_study):
    return build_time_grid(case_study, LAMBERT_INIT_TABLE, CFG.fine_step, CFG.coarse_step, CFG.fine_window,
                           CFG.skip_step)


def seconds(grid, scenario):
    return (grid.mjd2000 - scenario.start.mjd2000) * SECONDS_PER_DAY


def test_anchors_are_exact_grid_points(case_study, lambert_grid):
    assert lambert_grid.mjd2000[0] == case_study.start.mjd2000
    assert lambert_grid.mjd2000[-1] == case_study.end.mjd2000
    for m in LAMBERT_INIT_TABLE.rows:
        assert lambert_grid.mjd2000[lambert_grid.index_of(m.t.mjd2000)] == m.t.mjd2000
        assert lambert_grid.fine[lambert_grid.index_of(m.t.mjd2000)]


def test_strictly_increasing_and_read_only(lambert_grid):
    assert np.all(np.diff(lambert_grid.mjd2000) > 0)
    with pytest.raises(ValueError):
        lambert_grid.mjd2000[0] = 0.0


def assert_fine_steps_around(grid, scenario, anchors, reach=0.5):
    s = seconds(grid, scenario)
    for anchor in anchors:
        t = (anchor.mjd2000 - scenario.start.mjd2000) * SECONDS_PER_DAY
        near = s[(s >= t - reach - 1e-6) & (s <= t + reach + 1e-6)]
        assert len(near) > int(reach / CFG.fine_step)
        np.testing.assert_allclose(np.diff(near), CFG.fine_step, atol=1e-5)


def test_step_sizes(case_study, lambert_grid):
    s = seconds(lambert_grid, case_study)
    gaps = np.diff(s)
    both_fine = lambert_grid.fine[:-1] & lambert_grid.fine[1:]
    assert gaps[both_fine].max() <= CFG.fine_step + 1e-5
    assert gaps.max() <= CFG.skip_step + 1e-5
    for m in LAMBERT_INIT_TABLE.rows:
        t = (m.t.mjd2000 - case_study.start.mjd2000) * SECONDS_PER_DAY
        near = (s >= t - CFG.fine_window + 1.0) & (s <= t + CFG.fine_window - 1.0)
        assert lambert_grid.fine[near].all()
    assert_fine_steps_around(lambert_grid, case_study, [m.t for m in LAMBERT_INIT_TABLE.rows])


def test_burns_sharing_a_fine_window_each_get_regular_steps(case_study):
    first = Epoch(6600.0)
    second = first.shifted(100.05)
    rows = LAMBERT_INIT_TABLE.rows[:2] + (Maneuver((0.0, 0.01, 0.0), first), Maneuver((0.0, -0.01, 0.0), second))
    grid = build_time_grid(case_study, ActionTable(rows), CFG.fine_step, CFG.coarse_step, CFG.fine_window,
                           CFG.skip_step)
    assert_fine_steps_around(grid, case_study, [first, second], reach=2.0)
    s = seconds(grid, case_study)
    between = (s > seconds_of(first, case_study)) & (s < seconds_of(second, case_study))
    assert grid.fine[between].all()
    assert np.diff(s[between]).max() <= CFG.fine_step + 1e-5


def seconds_of(epoch, scenario):
    return (epoch.mjd2000 - scenario.start.mjd2000) * SECONDS_PER_DAY


def test_hybrid_grid_is_much_smaller_than_uniform_fine_grid(case_study, lambert_grid):
    uniform = case_study.duration / CFG.fine_step
    assert uniform / len(lambert_grid) >= 100.0


def test_tca_hint_is_a_grid_point(collision_scenario):
    grid = build_time_grid(collision_scenario, RANDOM_INIT_TABLE)
    assert grid.mjd2000[grid.index_of(collision_scenario.tca_hint.mjd2000)] == collision_scenario.tca_hint.mjd2000


def test_dock_epoch_gets_a_fine_window(case_study):
    dock = case_study.start.shifted(20000.0)
    grid = build_time_grid(case_study, RANDOM_INIT_TABLE, dock_epoch=dock)
    assert grid.fine[grid.index_of(dock.mjd2000)]
    assert grid.fine[grid.index_of(dock.mjd2000) + 100]


def test_coarse_points_outside_windows(case_study):
    grid = build_time_grid(case_study, RANDOM_INIT_TABLE)
    s = seconds(grid, case_study)
    assert not grid.fine[int(np.searchsorted(s, SECONDS_PER_DAY))]
    assert np.median(np.diff(s[~grid.fine])) == pytest.approx(CFG.coarse_step, abs=1e-5)


def test_unknown_epoch_raises(lambert_grid):
    with pytest.raises(KeyError):
        lambert_grid.index_of(lambert_grid.mjd2000[10] + 1e-7)


def test_rejects_bad_steps(case_study):
    with pytest.raises(ValueError):
        build_time_grid(case_study, RANDOM_INIT_TABLE, fine_step=10.0, coarse_step=10.0)
    with pytest.raises(ValueError):
        GridConfig(fine_window=0.0)
