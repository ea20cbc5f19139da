"""Chunked, deterministic work scheduling for Monte Carlo loops.

Replications are split into fixed-size chunks, each with its own derived
random stream, and partial results are merged in chunk order.  The chunk
plan depends only on the workload, never on the worker count, so running
with more threads changes wall time but not a single output bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")

# Target number of scalar draws per chunk; keeps per-chunk buffers around
# tens of megabytes regardless of permutation size.
CHUNK_TARGET = 1 << 21


def chunk_plan(total: int, per_item: int = 1) -> list[tuple[int, int, int]]:
    """Split ``total`` replications into (index, start, size) chunks.

    ``per_item`` is the number of scalar draws one replication needs; the
    chunk size shrinks as replications get heavier.
    """
    if total < 0:
        raise ValueError("total must be >= 0")
    size = max(1, min(total, CHUNK_TARGET // max(1, per_item)))
    plan = []
    start = 0
    index = 0
    while start < total:
        step = min(size, total - start)
        plan.append((index, start, step))
        start += step
        index += 1
    return plan


def run_chunks(
    plan: Sequence[tuple[int, int, int]],
    fn: Callable[[int, int, int], T],
    threads: int = 1,
) -> list[T]:
    """Evaluate ``fn(index, start, size)`` for every chunk, in plan order.

    With ``threads > 1`` the chunks run on a thread pool; results are still
    returned in plan order, so any downstream merge is order-stable.
    """
    if threads <= 1 or len(plan) <= 1:
        return [fn(*c) for c in plan]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, *c) for c in plan]
        return [f.result() for f in futures]
