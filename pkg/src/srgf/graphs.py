"""Per-super-ray graphs, Laplacians and the graph Fourier transform.

Each super-ray becomes one unweighted graph whose vertices are its rays,
ordered by ray linear index (reference-view pixels therefore come first).
The Laplacian splits into a spatial part, 4-adjacency inside each view, and
an angular part connecting disparity-shifted correspondents between
grid-adjacent views. The transform basis is the eigendecomposition of the
combinatorial Laplacian L = D - A.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .segmentation import SuperRayMap, shift_table

SIGN_TOL = 1e-8


@dataclass
class SuperRayGraph:
    """Graph of one super-ray.

    ``vertices`` holds global ray linear indices in ascending order; all
    other per-vertex arrays align with it. ``n_ref`` counts the vertices in
    the reference (top-left) view, which double as the super-ray's sample
    budget. ``spatial`` and ``angular`` are the two Laplacian terms.
    """

    label: int
    grid_shape: tuple[int, int]
    view_shape: tuple[int, int]
    vertices: np.ndarray
    view: np.ndarray
    srow: np.ndarray
    scol: np.ndarray
    n_ref: int
    spatial: sparse.csr_matrix
    angular: sparse.csr_matrix
    laplacian: sparse.csr_matrix = field(init=False)

    def __post_init__(self):
        self.laplacian = (self.spatial + self.angular).tocsr()

    @property
    def size(self) -> int:
        return len(self.vertices)


@dataclass
class EigenBasis:
    """Orthonormal Laplacian eigenbasis with a fixed vertex/sign convention.

    Columns of ``vectors`` are eigenvectors; the forward transform is
    ``vectors.T @ x``. For a connected graph eigenvalues are ascending; for
    a disconnected graph the basis is block-ordered component by component
    (components sorted by their smallest vertex) and eigenvalues ascend
    within each block. ``component`` maps vertices to their block.
    """

    vectors: np.ndarray
    values: np.ndarray
    component: np.ndarray


def _laplacian(n: int, ei: np.ndarray, ej: np.ndarray) -> sparse.csr_matrix:
    ones = np.ones(len(ei), dtype=np.float64)
    rows = np.concatenate([ei, ej, ei, ej])
    cols = np.concatenate([ej, ei, ei, ej])
    vals = np.concatenate([-ones, -ones, ones, ones])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _bucket_edges(a: np.ndarray, b: np.ndarray, lab: np.ndarray, k_count: int):
    """Split a global edge list into per-label (a, b) pairs."""
    order = np.argsort(lab, kind="stable")
    a, b, lab = a[order], b[order], lab[order]
    counts = np.bincount(lab, minlength=k_count + 1)
    stop = np.cumsum(counts)
    out = []
    for k in range(1, k_count + 1):
        lo, hi = stop[k - 1], stop[k]
        out.append((a[lo:hi], b[lo:hi]))
    return out


def _spatial_edges(labels: np.ndarray, ray: np.ndarray):
    same_h = labels[..., :, :-1] == labels[..., :, 1:]
    a_h = ray[..., :, :-1][same_h]
    lab_h = labels[..., :, :-1][same_h]
    same_v = labels[..., :-1, :] == labels[..., 1:, :]
    a_v = ray[..., :-1, :][same_v]
    lab_v = labels[..., :-1, :][same_v]
    cols = labels.shape[-1]
    a = np.concatenate([a_h, a_v])
    b = np.concatenate([a_h + 1, a_v + cols])
    return a, b, np.concatenate([lab_h, lab_v])


def _angular_edges(labels: np.ndarray, ray: np.ndarray, median: np.ndarray):
    """Edges between disparity-shifted correspondents in grid-adjacent views.

    A pixel of label k in view (m, n) connects to position
    (s + ds, t + dt) in the neighbouring view, where the deltas are
    differences of the accumulated rounded shifts, provided that pixel still
    carries label k there. These are exactly the positions the projection
    moved the label to, so consistent regions chain across the whole grid.
    """
    grid_rows, grid_cols, rows, cols = labels.shape
    tshift = shift_table(median, grid_cols)
    sshift = shift_table(median, grid_rows)
    s_grid, t_grid = np.indices((rows, cols))
    parts_a, parts_b, parts_lab = [], [], []

    def scan(src_lab, dst_lab, src_ray, dst_ray, dpix, axis_grid, limit):
        tgt = axis_grid[None] + dpix
        ok = (tgt >= 0) & (tgt < limit)
        w_i, s_i, t_i = np.nonzero(ok)
        tgt_ok = tgt[ok]
        if axis_grid is t_grid:
            match = dst_lab[w_i, s_i, tgt_ok] == src_lab[w_i, s_i, t_i]
            db = dst_ray[w_i[match], s_i[match], tgt_ok[match]]
        else:
            match = dst_lab[w_i, tgt_ok, t_i] == src_lab[w_i, s_i, t_i]
            db = dst_ray[w_i[match], tgt_ok[match], t_i[match]]
        parts_a.append(src_ray[w_i[match], s_i[match], t_i[match]])
        parts_b.append(db)
        parts_lab.append(src_lab[w_i[match], s_i[match], t_i[match]])

    for n in range(grid_cols - 1):
        src = labels[:, n]
        dpix = (tshift[:, n + 1] - tshift[:, n])[src]
        scan(src, labels[:, n + 1], ray[:, n], ray[:, n + 1], dpix, t_grid, cols)
    for m in range(grid_rows - 1):
        src = labels[m]
        dpix = (sshift[:, m + 1] - sshift[:, m])[src]
        scan(src, labels[m + 1], ray[m], ray[m + 1], dpix, s_grid, rows)

    if not parts_a:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty
    return (np.concatenate(parts_a), np.concatenate(parts_b),
            np.concatenate(parts_lab))


def build_graphs(srmap: SuperRayMap) -> list[SuperRayGraph]:
    """Build the graph of every super-ray in one pass over the label grids."""
    labels = srmap.labels
    grid_rows, grid_cols, rows, cols = labels.shape
    k_count = srmap.label_count
    ray = np.arange(labels.size, dtype=np.int64).reshape(labels.shape)

    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=k_count + 1)
    stop = np.cumsum(counts)
    vert_lists = [order[stop[k - 1]:stop[k]] for k in range(1, k_count + 1)]

    sa, sb, slab = _spatial_edges(labels, ray)
    aa, ab, alab = _angular_edges(labels, ray, srmap.median)
    spat = _bucket_edges(sa, sb, slab, k_count)
    angu = _bucket_edges(aa, ab, alab, k_count)

    view_size = rows * cols
    graphs = []
    for k in range(1, k_count + 1):
        verts = vert_lists[k - 1]
        n = len(verts)
        view, rem = np.divmod(verts, view_size)
        srow, scol = np.divmod(rem, cols)
        se_a, se_b = spat[k - 1]
        ae_a, ae_b = angu[k - 1]
        ls = _laplacian(n, np.searchsorted(verts, se_a), np.searchsorted(verts, se_b))
        la = _laplacian(n, np.searchsorted(verts, ae_a), np.searchsorted(verts, ae_b))
        graphs.append(SuperRayGraph(
            label=k,
            grid_shape=(grid_rows, grid_cols),
            view_shape=(rows, cols),
            vertices=verts,
            view=view.astype(np.int32),
            srow=srow.astype(np.int32),
            scol=scol.astype(np.int32),
            n_ref=int(np.searchsorted(verts, view_size)),
            spatial=ls,
            angular=la,
        ))
    return graphs


def fix_signs(vectors: np.ndarray, tol: float = SIGN_TOL) -> np.ndarray:
    """Flip eigenvector signs so the first entry above ``tol`` is positive.

    LAPACK only determines eigenvectors up to sign; pinning the sign makes
    the basis, and therefore every coded coefficient, reproducible.
    """
    mags = np.abs(vectors) > tol
    first = mags.argmax(axis=0)
    lead = vectors[first, np.arange(vectors.shape[1])]
    signs = np.where(lead < 0, -1.0, 1.0)
    return vectors * signs[None, :]


def component_order(adjacency_or_laplacian) -> tuple[int, np.ndarray]:
    """Connected components renumbered so block ids follow the smallest
    vertex contained in each component."""
    n_comp, memb = connected_components(abs(adjacency_or_laplacian),
                                        directed=False)
    first_vertex = np.full(n_comp, np.iinfo(np.int64).max, dtype=np.int64)
    for v in range(len(memb) - 1, -1, -1):
        first_vertex[memb[v]] = v
    remap = np.empty(n_comp, dtype=np.int64)
    remap[np.argsort(first_vertex)] = np.arange(n_comp)
    return n_comp, remap[memb]


def eigendecompose(laplacian) -> EigenBasis:
    """Dense symmetric eigendecomposition with the codec's conventions.

    The graph may be disconnected; each component is decomposed on its own
    and the blocks are concatenated in component order, keeping the total
    number of eigenvectors equal to the vertex count. Within a block the
    eigenvalues ascend, the DC vector comes first and every column's sign
    is pinned by :func:`fix_signs`.
    """
    if sparse.issparse(laplacian):
        dense = laplacian.toarray()
    else:
        dense = np.asarray(laplacian, dtype=np.float64)
    n = dense.shape[0]
    n_comp, memb = component_order(sparse.csr_matrix(dense) if n else dense)
    if n_comp <= 1:
        values, vectors = np.linalg.eigh(dense)
        return EigenBasis(fix_signs(vectors), values, memb)
    vectors = np.zeros((n, n))
    values = np.empty(n)
    pos = 0
    for comp in range(n_comp):
        idx = np.flatnonzero(memb == comp)
        w, v = np.linalg.eigh(dense[np.ix_(idx, idx)])
        span = slice(pos, pos + len(idx))
        values[span] = w
        vectors[idx, span] = fix_signs(v)
        pos += len(idx)
    return EigenBasis(vectors, values, memb)


def gft_forward(basis: EigenBasis, signal: np.ndarray) -> np.ndarray:
    """Project a vertex signal onto the eigenbasis."""
    return basis.vectors.T @ signal


def gft_inverse(basis: EigenBasis, spectrum: np.ndarray) -> np.ndarray:
    """Rebuild a vertex signal from its spectrum."""
    return basis.vectors @ spectrum
