"""Block-matching disparity estimation fallback.

Used when no disparity map accompanies the input. Integer candidate
disparities are scored by window-aggregated absolute differences between
the reference view and the other views of the first row, under the same
geometry the projection uses: a pixel with disparity d sits at column
``t + d * n`` in view (0, n). Coarse, but sufficient to seed super-ray
construction when nothing better is available.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from .lightfield import LightField


def estimate_disparity(lf: LightField, max_shift: int = 8,
                       window: int = 7) -> np.ndarray:
    grid_cols = lf.grid_shape[1]
    rows, cols = lf.view_shape
    ref = lf.views[0, 0].astype(np.float64)
    max_shift = min(max_shift, cols - 1)
    targets = [(n, lf.views[0, n].astype(np.float64))
               for n in range(1, min(grid_cols, 4))]
    if not targets:
        return np.zeros((rows, cols), dtype=np.float64)

    big = 1e18
    best_cost = np.full((rows, cols), np.inf)
    best_disp = np.zeros((rows, cols), dtype=np.float64)
    for d in range(-max_shift, max_shift + 1):
        cost = np.zeros((rows, cols))
        for n, view in targets:
            shift = d * n
            shifted = np.full((rows, cols), big)
            if shift >= 0:
                if shift < cols:
                    shifted[:, : cols - shift] = view[:, shift:]
            else:
                if -shift < cols:
                    shifted[:, -shift:] = view[:, :shift]
            diff = np.abs(ref - shifted)
            np.clip(diff, 0, 4096.0, out=diff)
            cost += diff
        cost = uniform_filter(cost, size=window, mode="nearest")
        better = cost < best_cost
        best_cost[better] = cost[better]
        best_disp[better] = float(d)
    return best_disp
