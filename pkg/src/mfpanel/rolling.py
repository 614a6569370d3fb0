"""Shared rolling-window arithmetic and deterministic parallel mapping."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def window_positions(n_samples: int, window: int, step: int) -> list[tuple[int, int]]:
    """Half-open index ranges [start, start+window) of every window position.

    The count is floor((n - window) / step) + 1; windows never extend past
    the series end.
    """
    if window <= 0 or step <= 0:
        raise ValueError("window and step must be positive")
    if window > n_samples:
        raise ValueError(f"window of {window} samples exceeds series length {n_samples}")
    count = (n_samples - window) // step + 1
    return [(i * step, i * step + window) for i in range(count)]


def duration_to_samples(duration_ms: int, interval_ms: int) -> int:
    """Wall-clock duration -> sample count on a uniform grid (no trading
    calendar: the market under study never closes)."""
    if duration_ms <= 0:
        raise ValueError("duration must be positive")
    samples = duration_ms // interval_ms
    if samples < 1:
        raise ValueError(f"duration {duration_ms} ms is shorter than one interval ({interval_ms} ms)")
    return int(samples)


def ordered_map(fn, items, threads: int = 1) -> list:
    """Apply ``fn`` over ``items``, optionally on a thread pool.

    Results come back in input order, so the output is identical for any
    thread count (workers must be pure).
    """
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
