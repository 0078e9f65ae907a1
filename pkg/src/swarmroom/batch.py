"""Order-preserving process-pool map.

Each task carries its own seed, so results never depend on the number of
workers or on scheduling.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import os
import sys
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "SWARMROOM_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def parallel_map(fn, items, workers: int | None = None, progress: str | None = None) -> list:
    """``[fn(x) for x in items]``, optionally spread over worker processes.

    ``progress`` is a label; when given, progress is reported on stderr.
    """
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    n = len(items)
    if workers == 1 or n <= 1:
        results = []
        for i, x in enumerate(items):
            results.append(fn(x))
            _report(progress, i + 1, n)
        return results
    chunksize = max(1, math.ceil(n / (workers * 8)))
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    results = []
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        for i, res in enumerate(pool.map(fn, items, chunksize=chunksize)):
            results.append(res)
            _report(progress, i + 1, n)
    return results


def _report(label, done, total):
    if label is None:
        return
    step = max(1, total // 20)
    if done == total or done % step == 0:
        print(f"{label}: {done}/{total}", file=sys.stderr, flush=True)
