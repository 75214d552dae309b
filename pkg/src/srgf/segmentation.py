"""Super-pixel segmentation of the reference view and super-ray projection.

A super-ray is the light-field extension of a super-pixel: the reference
view is segmented once, then each label is pushed into every other view by
shifting it with the label's median disparity. Occlusions are resolved in
favour of the higher disparity (foreground) and disoccluded holes take the
nearest assigned label with the lowest disparity (background), so the grids
stay a full partition of every view.

Everything here is deterministic. The decoder re-runs the projection from
transmitted labels and disparities, so any tie in occlusion or hole filling
is broken by a fixed rule rather than by traversal order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage.segmentation import slic as _skimage_slic

from .errors import InputError
from .util import round_half_away

_UNASSIGNED = np.int64(1 << 60)


@dataclass
class SuperRayMap:
    """Per-view label grids plus the per-label median disparity.

    ``labels`` has shape (M, N, S, T) with values in 1..K covering every
    pixel. ``median`` is indexed by label (entry 0 unused) and already holds
    the disparity values the decoder will see, i.e. quantised ones when the
    map comes from the codec path.
    """

    labels: np.ndarray
    median: np.ndarray

    @property
    def label_count(self) -> int:
        return len(self.median) - 1


def shift_table(median: np.ndarray, count: int) -> np.ndarray:
    """Integer shift of each label at angular offsets 0..count-1.

    Row ``k`` holds ``round_half_away(median[k] * offset)``: the real-valued
    disparity accumulates across the angular baseline before rounding, so
    sub-pixel disparities still move labels at larger view offsets.
    """
    offsets = np.arange(count, dtype=np.float64)
    return round_half_away(np.asarray(median)[:, None] * offsets[None, :])


def slic_segment(view: np.ndarray, k_target: int, compactness: float = 10.0,
                 iterations: int = 10) -> np.ndarray:
    """Segment one greyscale view into about ``k_target`` super-pixels.

    Labels come back as int32 in 1..K with connected regions; small orphan
    fragments are merged into a neighbouring region by the connectivity
    post-pass. K normally lands within 20% of ``k_target``.
    """
    view = np.asarray(view)
    if view.ndim != 2:
        raise InputError(f"expected a single 2-D view, got shape {view.shape}")
    if not 1 <= k_target <= view.size:
        raise InputError(f"k_target {k_target} out of range for {view.size} pixels")
    labels = _skimage_slic(
        view.astype(np.float64),
        n_segments=k_target,
        compactness=compactness,
        max_num_iter=iterations,
        channel_axis=None,
        enforce_connectivity=True,
        start_label=1,
    )
    # Renumber to a dense 1..K range; the connectivity pass can drop labels.
    _, dense = np.unique(labels, return_inverse=True)
    return (dense + 1).reshape(view.shape).astype(np.int32)


def split_oversized(labels: np.ndarray, view_count: int, vertex_cap: int) -> np.ndarray:
    """Bisect reference regions whose projected super-ray would be too big.

    Dense eigendecomposition is cubic in the vertex count, so regions where
    ``pixels * view_count`` exceeds ``vertex_cap`` are cut in half along
    their longer bounding-box axis until all estimates fit. Uses only the
    region geometry, which lets the decoder reproduce the exact same cuts
    from its own copy of the segmentation.
    """
    labels = labels.astype(np.int32, copy=True)
    if vertex_cap < view_count:
        raise InputError(f"vertex cap {vertex_cap} below the view count {view_count}")
    next_label = int(labels.max()) + 1
    queue = list(range(1, next_label))
    while queue:
        lab = queue.pop(0)
        ys, xs = np.nonzero(labels == lab)
        if ys.size * view_count <= vertex_cap:
            continue
        height = ys.max() - ys.min() + 1
        width = xs.max() - xs.min() + 1
        if height >= width:
            order = np.lexsort((xs, ys))
        else:
            order = np.lexsort((ys, xs))
        half = (ys.size + 1) // 2
        moved = order[half:]
        labels[ys[moved], xs[moved]] = next_label
        queue.append(lab)
        queue.append(next_label)
        next_label += 1
    return labels


def median_disparity(labels: np.ndarray, disparity: np.ndarray) -> np.ndarray:
    """Per-label median disparity, lower median for even-sized regions.

    Returns an array indexed by label; entry 0 is a placeholder. The lower
    median (element (n-1)//2 of the sorted values) keeps the result a value
    that actually occurs in the region, and is the same at both codec ends.
    """
    labels = np.asarray(labels)
    disparity = np.asarray(disparity, dtype=np.float64)
    if disparity.shape != labels.shape:
        raise InputError(
            f"disparity shape {disparity.shape} does not match view {labels.shape}")
    if not np.all(np.isfinite(disparity)):
        raise InputError("disparity map contains non-finite values")
    k_count = int(labels.max())
    med = np.zeros(k_count + 1, dtype=np.float64)
    flat_labels = labels.ravel()
    order = np.argsort(flat_labels, kind="stable")
    sorted_disp = disparity.ravel()[order]
    counts = np.bincount(flat_labels, minlength=k_count + 1)
    stop = np.cumsum(counts)
    for lab in range(1, k_count + 1):
        lo, hi = stop[lab - 1], stop[lab]
        if hi == lo:
            raise InputError(f"label {lab} has no pixels in the reference view")
        vals = np.sort(sorted_disp[lo:hi])
        med[lab] = vals[(len(vals) - 1) // 2]
    return med


def _paint_projection(src: np.ndarray, ds: np.ndarray, dt: np.ndarray,
                      occ_rank: np.ndarray) -> np.ndarray:
    """Shift every label of ``src`` rigidly; ties go to the higher occlusion
    rank (higher disparity, then smaller label). Returns 0 where no source
    pixel lands."""
    rows, cols = src.shape
    flat = src.ravel()
    s_idx, t_idx = np.divmod(np.arange(flat.size), cols)
    ss = s_idx + ds[flat]
    tt = t_idx + dt[flat]
    ok = (ss >= 0) & (ss < rows) & (tt >= 0) & (tt < cols)
    tgt = ss[ok] * cols + tt[ok]
    lab = flat[ok]
    order = np.lexsort((occ_rank[lab], tgt))
    tgt = tgt[order]
    lab = lab[order]
    if tgt.size == 0:
        return np.zeros_like(src)
    winner = np.ones(tgt.size, dtype=bool)
    winner[1:] = tgt[1:] != tgt[:-1]
    out = np.zeros(rows * cols, dtype=np.int32)
    out[tgt[winner]] = lab[winner]
    return out.reshape(rows, cols)


def _fill_holes(view: np.ndarray, fill_rank: np.ndarray,
                rank_to_label: np.ndarray) -> np.ndarray:
    """Fill unassigned pixels by raster scans with immediate assignment.

    Each hole takes the lowest (disparity, label) rank among its currently
    assigned 4-neighbours; a pixel filled earlier in the same scan already
    counts. This lets a background label run through a gap and win contested
    pixels against a nearer foreground one. Scans repeat until covered."""
    rows, cols = view.shape
    key = np.where(view > 0, fill_rank[view], _UNASSIGNED)
    if not (key != _UNASSIGNED).any():
        # Nothing assigned anywhere in the view: fall back to the lowest
        # fill rank so the output is still a full, deterministic cover.
        key[:] = fill_rank[1:].min()
    pending = [(int(s), int(t)) for s, t in np.argwhere(key == _UNASSIGNED)]
    while pending:
        rest = []
        for s, t in pending:
            best = _UNASSIGNED
            if s > 0 and key[s - 1, t] < best:
                best = key[s - 1, t]
            if s + 1 < rows and key[s + 1, t] < best:
                best = key[s + 1, t]
            if t > 0 and key[s, t - 1] < best:
                best = key[s, t - 1]
            if t + 1 < cols and key[s, t + 1] < best:
                best = key[s, t + 1]
            if best != _UNASSIGNED:
                key[s, t] = best
            else:
                rest.append((s, t))
        pending = rest
    return rank_to_label[key].astype(np.int32)


def project_superrays(labels: np.ndarray, median: np.ndarray,
                      grid_shape: tuple[int, int]) -> SuperRayMap:
    """Propagate the reference segmentation to every view of the grid.

    The first row of views is projected horizontally from the reference;
    every other row first projects vertically to its leading view and then
    horizontally along the row, matching the row-by-row schedule the decoder
    replays. Shifts are ``round_half_away(median * angular_offset)`` so that
    sub-pixel disparities accumulate before rounding.
    """
    grid_rows, grid_cols = grid_shape
    labels = np.asarray(labels, dtype=np.int32)
    k_count = len(median) - 1
    zero = np.zeros(k_count + 1, dtype=np.int64)

    # Occlusion: higher disparity paints over lower; equal disparity goes to
    # the smaller label. Ranks are per-label so each view reuses them.
    by_occ = sorted(range(1, k_count + 1), key=lambda k: (-median[k], k))
    occ_rank = np.zeros(k_count + 1, dtype=np.int64)
    occ_rank[by_occ] = np.arange(k_count)
    # Hole filling prefers the lowest disparity, then the smaller label.
    by_fill = sorted(range(1, k_count + 1), key=lambda k: (median[k], k))
    fill_rank = np.zeros(k_count + 1, dtype=np.int64)
    fill_rank[by_fill] = np.arange(k_count)
    rank_to_label = np.zeros(k_count + 1, dtype=np.int64)
    rank_to_label[fill_rank[1:]] = np.arange(1, k_count + 1)

    shift_s = shift_table(median, grid_rows)
    shift_t = shift_table(median, grid_cols)

    out = np.empty((grid_rows, grid_cols) + labels.shape, dtype=np.int32)
    out[0, 0] = labels
    for m in range(grid_rows):
        if m > 0:
            painted = _paint_projection(labels, shift_s[:, m], zero, occ_rank)
            out[m, 0] = _fill_holes(painted, fill_rank, rank_to_label)
        row_src = out[m, 0]
        for n in range(1, grid_cols):
            painted = _paint_projection(row_src, zero, shift_t[:, n], occ_rank)
            out[m, n] = _fill_holes(painted, fill_rank, rank_to_label)
    return SuperRayMap(labels=out, median=np.asarray(median, dtype=np.float64))
