import asyncio
import time

from ooscam.workers.worker import evaluate_batch, evaluate_batch_async, safe_evaluate


def square(x):
    return x * x


def fragile(x):
    if x == 3:
        raise RuntimeError("bad session")
    return x


def test_results_keep_submission_order():
    jobs = list(range(25))
    assert evaluate_batch(square, jobs, num_workers=4) == [x * x for x in jobs]
    assert evaluate_batch(square, jobs, num_workers=1) == [x * x for x in jobs]


def test_failures_become_none():
    assert evaluate_batch(fragile, [1, 3, 5], num_workers=1) == [1, None, 5]
    assert evaluate_batch(fragile, [1, 3, 5], num_workers=3) == [1, None, 5]


def test_empty_batch():
    assert evaluate_batch(square, [], num_workers=4) == []


def test_workers_run_concurrently():
    def slow(x):
        time.sleep(0.2)
        return x

    started = time.perf_counter()
    assert evaluate_batch(slow, list(range(4)), num_workers=4) == [0, 1, 2, 3]
    assert time.perf_counter() - started < 0.6


def test_more_workers_than_jobs():
    assert asyncio.run(evaluate_batch_async(square, [2, 3], num_workers=8)) == [4, 9]


def test_safe_evaluate_swallows_errors():
    assert asyncio.run(safe_evaluate(fragile, 3, index=0, worker_id=1)) is None
    assert asyncio.run(safe_evaluate(fragile, 4, index=0, worker_id=1)) == 4
