import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from app.core.errors import ValidationFailure

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Apply fn to every item; results come back in input order for any thread count."""
    if threads < 1:
        raise ValidationFailure(f"threads must be at least 1, got {threads}")
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("ordered_map over %d items on %d threads", len(items), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
