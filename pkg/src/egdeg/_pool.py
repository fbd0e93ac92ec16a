"""Order-preserving worker pool.

Results are collected in submission order, so the output of a run is
independent of the pool size; reproducibility-critical runs default to one
worker via EGDEG_WORKERS.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, workers: int = 1) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
