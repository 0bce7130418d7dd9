"""Order-preserving worker parallelism with a process-wide thread cap.

Results are returned in input order, and every job computes its own
result independently, so outputs are identical for any thread count.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from mcn_seg.config.settings import RuntimeSettings

T = TypeVar("T")
R = TypeVar("R")

_thread_cap: int | None = None


def set_thread_cap(threads: int) -> None:
    global _thread_cap
    _thread_cap = max(1, int(threads))


def thread_cap() -> int:
    """Configured cap, else ``MCN_THREADS`` (read once)."""
    global _thread_cap
    if _thread_cap is None:
        _thread_cap = RuntimeSettings.from_env().threads
    return _thread_cap


def parallel_map(
    fn: Callable[[T], R], items: Iterable[T], max_workers: int | None = None
) -> list[R]:
    items = list(items)
    workers = min(max_workers or thread_cap(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
