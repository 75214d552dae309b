"""Small shared helpers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def round_half_away(x):
    """Round to nearest integer with halves going away from zero.

    numpy's default rounding is round-half-even, which would make shift and
    quantiser outputs depend on parity; every rounding step in the codec goes
    through this helper instead so encoder and decoder agree.
    """
    x = np.asarray(x)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def parallel_map(fn, items, threads: int = 1) -> list:
    """Apply ``fn`` over ``items``, preserving order.

    With ``threads`` > 1 the work is spread over a thread pool; numpy's
    LAPACK calls release the GIL so per-super-ray linear algebra scales.
    Output order is the input order either way, which keeps every downstream
    byte deterministic regardless of the worker count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
