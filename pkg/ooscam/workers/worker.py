import asyncio
from typing import Any, Callable, List, Optional, Sequence

from loguru import logger


async def safe_evaluate(evaluate: Callable[[Any], Any], job: Any, index: int, worker_id: int) -> Optional[Any]:
    """
    Runs one CPU-bound evaluation in a thread.
    Any exception is logged and turned into None so the batch keeps going.
    """
    try:
        return await asyncio.to_thread(evaluate, job)
    except Exception as e:
        logger.error(f"[Worker {worker_id}] Evaluation of session {index} failed: {type(e).__name__}: {e}")
        return None


async def worker(queue: asyncio.Queue, evaluate: Callable[[Any], Any], results: List[Optional[Any]],
                 worker_id: int) -> None:
    """
    Worker loop that processes queue items.

    Each queue item is a tuple:
       (index, job)
    and its result is stored at results[index].
    """
    while True:
        index, job = await queue.get()
        logger.debug(f"[Worker {worker_id}] Evaluating session {index}")
        results[index] = await safe_evaluate(evaluate, job, index, worker_id)
        queue.task_done()


async def evaluate_batch_async(evaluate: Callable[[Any], Any], jobs: Sequence[Any], num_workers: int) -> List[Optional[Any]]:
    queue: asyncio.Queue = asyncio.Queue()
    results: List[Optional[Any]] = [None] * len(jobs)
    for index, job in enumerate(jobs):
        queue.put_nowait((index, job))

    worker_tasks = [
        asyncio.create_task(worker(queue, evaluate, results, worker_id=i + 1))
        for i in range(max(1, min(num_workers, len(jobs))))
    ]
    try:
        await queue.join()
    finally:
        for task in worker_tasks:
            task.cancel()
        await asyncio.gather(*worker_tasks, return_exceptions=True)
    return results


def evaluate_batch(evaluate: Callable[[Any], Any], jobs: Sequence[Any], num_workers: int = 1) -> List[Optional[Any]]:
    """
    Evaluates every job, in order of submission, with up to `num_workers` concurrent threads.
    With a single worker the jobs run inline; results are identical either way.
    """
    if num_workers <= 1 or len(jobs) <= 1:
        results = []
        for index, job in enumerate(jobs):
            try:
                results.append(evaluate(job))
            except Exception as e:
                logger.error(f"Evaluation of session {index} failed: {type(e).__name__}: {e}")
                results.append(None)
        return results
    return asyncio.run(evaluate_batch_async(evaluate, jobs, num_workers))
