import logging
import os
import time
from contextlib import contextmanager
from typing import Callable, Iterable, List, Optional

from joblib import Parallel, delayed
from tqdm import tqdm

logger = logging.getLogger(__name__)

THREADS_ENV = 'WINFO_THREADS'


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, 1))
    return max(1, int(threads))


def parallel_map(fn: Callable, items: Iterable, threads: int = 1,
                 desc: Optional[str] = None) -> List:
    """``[fn(x) for x in items]`` on a thread pool, results in submission order."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in tqdm(items, desc=desc, disable=None if desc else True, leave=False)]
    return Parallel(n_jobs=threads, prefer='threads')(delayed(fn)(x) for x in items)


@contextmanager
def tagged_logger(log: logging.Logger, tag: Optional[str]):
    """Suffix ``[tag]`` to the logger name while the block runs; a None tag leaves it alone."""
    base = log.name
    if tag:
        log.name = f'{base}[{tag}]'
    try:
        yield log
    finally:
        log.name = base


@contextmanager
def timed(label: str, sink: Optional[dict] = None):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    if sink is not None:
        sink[label] = elapsed
    logger.info(f'{label} finished in {elapsed:.2f}s')
