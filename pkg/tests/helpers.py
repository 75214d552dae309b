"""Builders shared across test modules: hand-made super-ray maps and
randomized graphs grown from synthetic light fields."""

from __future__ import annotations

import numpy as np

from fields import layered_field
from srgf.graphs import build_graphs
from srgf.segmentation import (SuperRayMap, median_disparity,
                               project_superrays, slic_segment)
from srgf.util import round_half_away


def srmap_from(label_views, median) -> SuperRayMap:
    """Wrap explicit per-view label grids; median[0] is the unused slot."""
    return SuperRayMap(labels=np.asarray(label_views, dtype=np.int32),
                       median=np.asarray(median, dtype=np.float64))


def quantized_median(labels: np.ndarray, disparity: np.ndarray) -> np.ndarray:
    """Median disparity snapped to the 1/16 grid the codec transmits."""
    med = median_disparity(labels, disparity)
    return round_half_away(med * 16).astype(np.float64) / 16


def field_graphs(rng: np.random.Generator, grid=(2, 2), shape=(16, 16),
                 segments=4):
    """Graphs of one random two-layer light field."""
    bg = float(rng.uniform(0.0, 1.5))
    fg = bg + float(rng.uniform(0.5, 1.5))
    rows, cols = shape
    r0 = int(rng.integers(1, max(2, rows // 3)))
    c0 = int(rng.integers(1, max(2, cols // 3)))
    box = (r0, c0, int(rng.integers(2, rows - r0)),
           int(rng.integers(2, cols - c0)))
    lf, disp = layered_field(grid, shape, bg, fg, box,
                             seed=int(rng.integers(1 << 30)))
    labels = slic_segment(lf.views[0, 0].astype(np.int64), segments)
    srmap = project_superrays(labels, quantized_median(labels, disp), grid)
    return build_graphs(srmap)


def random_graphs(rng: np.random.Generator, count: int, max_size=500):
    """At least ``count`` random super-ray graphs, sizes capped by
    construction; mixes grid sizes, disparities, and segment counts."""
    out = []
    while len(out) < count:
        grid = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        side = int(rng.integers(8, 22))
        segments = int(rng.integers(1, 9))
        for g in field_graphs(rng, grid, (side, side), segments):
            if g.size <= max_size:
                out.append(g)
    return out[:count]
