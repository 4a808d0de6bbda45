import math

import numpy as np
import pytest

from ooscam.environment.types import ROWS, ActionTable, GridConfig
from ooscam.scenarios.generator import RANDOM_INIT_TABLE
from ooscam.training.cross_entropy import (MAX_PERCENTILE, CEConfig, CrossEntropyTrainer, PolicyDistribution,
                                           TrainingAborted, repair_table_vector, select_elite, train)

CENTER = np.array([0.3, -1.2, 2.0])


def bowl(params):
    return -float(np.sum((np.asarray(params) - CENTER) ** 2))


class TestSelectElite:
    def test_percentile_keeps_top_session(self):
        np.testing.assert_array_equal(select_elite([-3.0, -2.0, -1.0], 67.0), [2])

    def test_low_percentile_keeps_everything(self):
        np.testing.assert_array_equal(select_elite([-3.0, -2.0, -1.0], 0.0), [0, 1, 2])

    def test_ties_are_kept(self):
        np.testing.assert_array_equal(select_elite([5.0, 1.0, 5.0, 5.0], 90.0), [0, 2, 3])

    def test_empty(self):
        with pytest.raises(ValueError):
            select_elite([], 50.0)


def test_distribution_sampling(rng):
    dist = PolicyDistribution(np.array([1.0, 2.0]), np.array([0.0, 0.5]))
    samples = dist.sample(rng, 5000)
    assert samples.shape == (5000, 2)
    assert np.all(samples[:, 0] == 1.0)
    assert samples[:, 1].std() == pytest.approx(0.5, rel=0.05)
    with pytest.raises(ValueError):
        PolicyDistribution(np.zeros(2), np.array([-1.0, 1.0]))


def test_zero_sigma_keeps_the_initial_policy():
    cfg = CEConfig(iterations=3, sessions=4)
    log = CrossEntropyTrainer(bowl, cfg).run(np.zeros(3), sigma=np.zeros(3))
    np.testing.assert_array_equal(log.final_mean, np.zeros(3))
    for record in log.records:
        assert record.mean_reward == record.max_reward == record.policy_reward == bowl(np.zeros(3))


@pytest.mark.parametrize("seed", range(10))
def test_converges_on_a_bowl(seed):
    cfg = CEConfig(iterations=35, sessions=30, patience=35, seed=seed)
    log = CrossEntropyTrainer(bowl, cfg).run(CENTER + 0.05, sigma=np.full(3, 0.01))
    assert np.linalg.norm(log.final_mean - CENTER) < 1e-2
    assert np.linalg.norm(log.best_params - CENTER) < 1e-2
    assert log.best_reward == max(r.best_reward for r in log.records)


def test_schedules():
    cfg = CEConfig(iterations=30, sessions=6, patience=30)
    sigma0 = cfg.initial_sigma()
    log = CrossEntropyTrainer(lambda p: -float(np.sum(p ** 2)), cfg).run(np.zeros(sigma0.size))
    assert len(log.records) == 30
    for k, record in enumerate(log.records):
        assert record.iteration == k
        assert record.sigma_norm == pytest.approx(np.linalg.norm(sigma0) * 0.98 ** k)
        assert record.lr == pytest.approx(0.98 ** k)
        assert record.percentile == pytest.approx(min(70.0 * 1.005 ** k, MAX_PERCENTILE))
    assert all(a.best_reward <= b.best_reward for a, b in zip(log.records, log.records[1:]))


def test_percentile_is_capped():
    cfg = CEConfig(iterations=5, sessions=4, percentile_growth=2.0, patience=5)
    log = CrossEntropyTrainer(bowl, cfg).run(np.zeros(3), sigma=np.ones(3))
    assert [r.percentile for r in log.records] == [70.0, MAX_PERCENTILE, MAX_PERCENTILE, MAX_PERCENTILE,
                                                   MAX_PERCENTILE]


def test_stops_when_best_is_stale():
    cfg = CEConfig(iterations=20, sessions=4, patience=3)
    log = CrossEntropyTrainer(lambda p: 1.0, cfg).run(np.zeros(2), sigma=np.ones(2))
    assert log.stopped_early
    assert len(log.records) == 4


def test_failed_sessions_are_counted_and_skipped():
    def half_plane(params):
        return None if params[0] > 0.0 else bowl(params)

    cfg = CEConfig(iterations=5, sessions=20, patience=5)
    log = CrossEntropyTrainer(half_plane, cfg).run(np.zeros(3), sigma=np.ones(3))
    assert sum(r.failed_sessions for r in log.records) > 0
    assert all(np.isfinite(r.mean_reward) for r in log.records)
    assert log.best_params[0] <= 0.0


def test_exceptions_count_as_failures():
    def flaky(params):
        if params[0] > 0.0:
            raise ZeroDivisionError("boom")
        return bowl(params)

    log = CrossEntropyTrainer(flaky, CEConfig(iterations=2, sessions=20)).run(np.zeros(3), sigma=np.ones(3))
    assert sum(r.failed_sessions for r in log.records) > 0


def test_all_failed_iteration_aborts():
    with pytest.raises(TrainingAborted):
        CrossEntropyTrainer(lambda p: None, CEConfig(iterations=3, sessions=5)).run(np.zeros(3), sigma=np.ones(3))


def test_parallel_and_serial_logs_match():
    cfg = CEConfig(iterations=6, sessions=12, seed=4)
    serial = CrossEntropyTrainer(bowl, cfg, workers=1).run(np.zeros(3), sigma=np.ones(3))
    parallel = CrossEntropyTrainer(bowl, cfg, workers=4).run(np.zeros(3), sigma=np.ones(3))
    assert serial.rows() == parallel.rows()
    np.testing.assert_array_equal(serial.best_params, parallel.best_params)


def test_repair_clamps_sorts_and_clips():
    params = np.array([
        [1.0, 2.0, 3.0, 10.5],
        [4.0, 5.0, 6.0, 9.0],
        [500.0, -500.0, 0.0, 12.0],
        [7.0, 8.0, 9.0, 10.2],
    ]).reshape(-1)
    rows = repair_table_vector(params, 9.5, 11.0, dv_bound=100.0).reshape(ROWS, 4)
    np.testing.assert_array_equal(rows[:, 3], [9.5, 10.2, 10.5, 11.0])
    np.testing.assert_array_equal(rows[0, :3], [4.0, 5.0, 6.0])
    np.testing.assert_array_equal(rows[3, :3], [100.0, -100.0, 0.0])


def test_config_validation_and_modes():
    with pytest.raises(ValueError):
        CEConfig(sessions=1)
    with pytest.raises(ValueError):
        CEConfig(sigma_decay=1.5)
    with pytest.raises(ValueError):
        CEConfig.for_init("annealing")
    lambert = CEConfig.for_init("lambert", iterations=4)
    assert (lambert.sigma_dv, lambert.sigma_t, lambert.iterations) == (5.0, 0.005, 4)
    assert lambert.initial_sigma().size == 16


def test_short_training_run(case_study):
    cfg = CEConfig.for_init("random", iterations=2, sessions=3, seed=1)
    best, log = train(case_study, cfg, RANDOM_INIT_TABLE, grid=GridConfig(coarse_step=30.0), workers=2)
    assert isinstance(best, ActionTable)
    best.check_window(case_study.start, case_study.end)
    assert len(log.records) == 2
    assert math.isfinite(log.best_reward)
    assert log.best_reward >= max(r.max_reward for r in log.records)
