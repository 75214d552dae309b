"""Uniform quantisation and energy-based coefficient classes.

Super-rays whose high-frequency tail is almost empty do not need to send
it: each super-ray is assigned to one of four classes by testing the mean
squared value of progressively shorter tails, and the decoder zeroes the
tail its class implies. Class 4 keeps everything.
"""

from __future__ import annotations

import numpy as np

from .util import round_half_away

# Sentinel quantisation step: 0 selects bypass, where coefficients snap to a
# fixed fine grid and the reconstruction rounds back to the exact pixels.
BYPASS_STEP = 1.0 / 1024.0
CLASS_COUNT = 4


def effective_step(q: float) -> float:
    if q < 0:
        raise ValueError(f"quantisation step must be non-negative, got {q}")
    return BYPASS_STEP if q == 0.0 else q


def quantize(coeffs: np.ndarray, step: float) -> np.ndarray:
    return round_half_away(np.asarray(coeffs, dtype=np.float64) / step)


def dequantize(symbols: np.ndarray, step: float) -> np.ndarray:
    return np.asarray(symbols, dtype=np.float64) * step


def class_cut(count: int, cls: int) -> int:
    """Number of trailing coefficients class ``cls`` drops."""
    return int(round_half_away(count * (CLASS_COUNT - cls) / CLASS_COUNT))


def assign_class(y: np.ndarray) -> int:
    """Sequential tail-energy test; first class whose tail is quiet wins."""
    n = len(y)
    for cls in range(1, CLASS_COUNT):
        cut = class_cut(n, cls)
        if cut == 0:
            continue
        tail = y[n - cut:]
        if float(np.mean(tail * tail)) < 1.0:
            return cls
    return CLASS_COUNT


def assign_classes(spectra) -> np.ndarray:
    return np.array([assign_class(y) for y in spectra], dtype=np.int64)
