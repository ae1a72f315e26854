"""
`workers` module stores the `--jobs` worker pool used by exhaustive enumerations.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

Item = TypeVar('Item')
Result = TypeVar('Result')

logger = logging.getLogger(__name__)


def run_partitioned(fn: Callable[[Item], Result], items: Iterable[Item], jobs: int = 1) -> List[Result]:
    """
    `run_partitioned` function maps `fn` over `items` and returns results in item order.
    With `jobs` > 1 the items are split into chunks across worker processes; `fn`
    must then be picklable (a module-level function or a `functools.partial` of one).
    """
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (jobs * 4))
    logger.info('running %d items on %d workers (chunks of %d)', len(items), jobs, chunk)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
