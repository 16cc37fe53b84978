# adapters/parallel/process_pool.py
import logging
from multiprocessing import Pool
from typing import Callable, List, Sequence, TypeVar

from core.domain.interfaces import TaskRunner

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class SerialTaskRunner(TaskRunner):
    """Runs every chunk in the calling process."""

    def map(self, fn: Callable[[T], R], chunks: Sequence[T]) -> List[R]:
        return [fn(chunk) for chunk in chunks]


class ProcessPoolTaskRunner(TaskRunner):
    """
    Spreads chunks over a multiprocessing pool.

    `fn` must be a picklable top-level function. Results come back in
    submission order, so callers see the same list as with the serial runner.
    If the pool cannot be started the chunks run serially instead.
    """

    def __init__(self, jobs: int):
        if jobs < 1:
            raise ValueError("jobs must be at least 1")
        self.jobs = jobs

    def map(self, fn: Callable[[T], R], chunks: Sequence[T]) -> List[R]:
        if len(chunks) <= 1:
            return [fn(chunk) for chunk in chunks]
        try:
            pool = Pool(processes=min(self.jobs, len(chunks)))
        except (OSError, ValueError) as e:
            logger.warning(f"Process pool unavailable ({e}); running {len(chunks)} chunks serially")
            return SerialTaskRunner().map(fn, chunks)
        with pool:
            results = list(pool.imap(fn, chunks))
        logger.info(f"Processed {len(chunks)} chunks on {self.jobs} workers")
        return results
