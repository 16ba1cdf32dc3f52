import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Callable, List, Optional

import numpy as np

logger = logging.getLogger(__name__)

THREADS_ENV = "BEKK_TAILS_THREADS"
DEFAULT_MAX_THREADS = 8


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for replicate `index` of a run seeded with `seed`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def entropy_seed() -> int:
    """Fresh seed from OS entropy, reduced to 63 bits so it fits every output format."""
    return int(np.random.SeedSequence().entropy) % (2 ** 63)


def thread_count() -> int:
    """Worker threads: BEKK_TAILS_THREADS if set, else min(8, cpu count)."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
            if value >= 1:
                return value
        except ValueError:
            pass
        logger.warning(f"Ignoring invalid {THREADS_ENV}={raw!r}")
    return min(DEFAULT_MAX_THREADS, os.cpu_count() or 1)


class ReplicateWorker:
    """
    Runs independent replicate jobs on a thread pool.

    Each job receives (index, rng) with rng derived from (seed, index), and the
    results come back ordered by index, so a run is reproducible whatever the
    scheduling.
    """

    def __init__(self, seed: int, max_workers: Optional[int] = None,
                 progress: Optional[Callable[[str], None]] = None):
        self.seed = seed
        self.max_workers = max_workers or thread_count()
        self.progress = progress

    def map(self, job: Callable[[int, np.random.Generator], Any], n: int) -> List[Any]:
        results: List[Any] = [None] * n
        if n == 0:
            return results
        if self.max_workers == 1 or n == 1:
            for index in range(n):
                results[index] = job(index, replicate_rng(self.seed, index))
                self._emit(index + 1, n)
            return results

        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_index = {
                executor.submit(job, index, replicate_rng(self.seed, index)): index
                for index in range(n)
            }
            done = 0
            for future in as_completed(future_to_index):
                index = future_to_index[future]
                try:
                    results[index] = future.result()
                except Exception:
                    logger.exception(f"Replicate {index} failed")
                    raise
                done += 1
                self._emit(done, n)
        return results

    def _emit(self, done: int, total: int):
        logger.debug(f"Replicates finished: {done}/{total}")
        if self.progress:
            self.progress(f"{done}/{total} replicates")
