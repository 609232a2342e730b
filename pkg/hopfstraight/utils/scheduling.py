import concurrent.futures
import typing as t
from functools import partial

from hopfstraight.constants import Toolkit
from hopfstraight.log import get_logger


log = get_logger(__name__)

T = t.TypeVar("T")
R = t.TypeVar("R")


def map_ordered(
    func: t.Callable[[T], R],
    items: t.Iterable[T],
    *,
    workers: t.Optional[int] = None,
    suppressed_exceptions: tuple[t.Type[Exception], ...] = (),
) -> list[R]:
    """
    Apply `func` to every item on a thread pool and return the results in input order.

    Exceptions raised by `func` are logged with the index of the failing item and re-raised from here,
    the first failing item (by index) wins. Exceptions listed in `suppressed_exceptions` are expected
    failures and only logged at debug level.

    With a single worker, or a single item, the work runs inline on the calling thread.
    """
    items = list(items)
    workers = Toolkit.threads if workers is None else max(1, workers)

    if workers == 1 or len(items) <= 1:
        log.trace(f"Running {len(items)} items inline.")
        results = []
        for index, item in enumerate(items):
            try:
                results.append(func(item))
            except Exception as e:
                _log_item_exception(index, e, suppressed_exceptions=suppressed_exceptions)
                raise
        return results

    log.trace(f"Fanning out {len(items)} items over {workers} workers.")
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, item) for item in items]
        for index, future in enumerate(futures):
            future.add_done_callback(partial(_future_done_callback, index, suppressed_exceptions=suppressed_exceptions))
        # result() re-raises the item's exception in index order
        return [future.result() for future in futures]


def _future_done_callback(
    index: int,
    future: concurrent.futures.Future,
    *,
    suppressed_exceptions: tuple[t.Type[Exception], ...],
) -> None:
    """Retrieve and log the exception raised for the item at `index` if one exists."""
    if future.cancelled():
        return
    exception = future.exception()
    if exception:
        _log_item_exception(index, exception, suppressed_exceptions=suppressed_exceptions)


def _log_item_exception(
    index: int,
    exception: BaseException,
    *,
    suppressed_exceptions: tuple[t.Type[Exception], ...],
) -> None:
    if isinstance(exception, suppressed_exceptions):
        log.debug(f"Item #{index} failed: {exception}")
    else:
        log.error(f"Error in item #{index}!", exc_info=exception)
