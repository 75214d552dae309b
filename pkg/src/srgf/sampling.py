"""Band-limited graph sampling and sample placement.

A super-ray's signal is transmitted through a handful of sampled rays plus
high-frequency residuals. The sampled rays must form a uniqueness set for
the space spanned by the first eigenvectors: the greedy selection below
grows the set one vertex at a time, always taking the vertex that best
captures the direction the current set leaves undetermined (the null space
of the sampled sub-basis). Compared to blindly sampling the reference view
this keeps the reconstruction system invertible and well conditioned even
when occlusions make some rays invisible from the reference view.

The chosen rays are then wrapped into the reference view: each sample lands
on the reference pixel its angular chain points at, first come first
served, and the leftovers fill the remaining region pixels in raster order.
Both codec ends replay the same selection and placement, so neither is
transmitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import EigenBasis, SuperRayGraph, component_order

ZERO_ROW_TOL = 1e-12


@dataclass
class SamplingSet:
    """Vertices chosen for one super-ray, in selection order.

    ``log10_condition`` is the decimal log of cond(U(S, T)) for the final
    set; ``warned`` records that some step had a kernel of dimension above
    one and fell back to the first basis vector of the kernel.
    """

    vertices: np.ndarray
    log10_condition: float
    warned: bool


@dataclass
class AngularChains:
    """Connected components of the angular Laplacian.

    Each chain is one correspondence track: the pixels a single scene point
    projects to across the views. ``chain`` maps every vertex to its track;
    ``ref_partner`` maps it to the smallest reference-view vertex on the
    same track, or -1 when the track never crosses the reference view.
    """

    chain: np.ndarray
    n_ref: int
    ref_partner: np.ndarray

    def matrix(self) -> np.ndarray:
        """Dense correspondence matrix: rows are reference pixels, columns
        all vertices, ones where both sit on the same chain."""
        return self.chain[: self.n_ref, None] == self.chain[None, :]


def centroid_seed(graph: SuperRayGraph) -> int:
    """Reference pixel closest to the region's centroid, ties by raster
    order; the first vertex the greedy selection starts from."""
    n_ref = graph.n_ref
    rows = graph.srow[:n_ref].astype(np.float64)
    cols = graph.scol[:n_ref].astype(np.float64)
    d2 = (rows - rows.mean()) ** 2 + (cols - cols.mean()) ** 2
    return int(np.argmin(d2))


def select_sampling_set(basis: EigenBasis, count: int, seed_vertex: int) -> SamplingSet:
    """Greedy uniqueness-set selection for the first ``count`` eigenvectors.

    Starting from the seed, each round finds the direction of the
    (count-limited) spectrum that the sampled rows cannot see, scores every
    unsampled vertex by how strongly its normalised basis row projects onto
    that direction, and takes the best scorer. Ties resolve to the smallest
    vertex index and rows with negligible norm are skipped outright.
    """
    U = basis.vectors
    n = U.shape[0]
    if not 1 <= count <= n:
        raise ValueError(f"sample count {count} out of range for {n} vertices")
    chosen = [int(seed_vertex)]
    in_set = np.zeros(n, dtype=bool)
    in_set[seed_vertex] = True
    warned = False

    for m in range(2, count + 1):
        sub = U[np.ix_(chosen, range(m))]
        _, svals, vt = np.linalg.svd(sub)
        tol = max(sub.shape) * np.finfo(np.float64).eps * (svals[0] if len(svals) else 0.0)
        rank = int(np.sum(svals > tol))
        if rank < m - 1:
            warned = True
        z = vt[rank]

        rest = np.flatnonzero(~in_set)
        rows = U[np.ix_(rest, range(m))]
        norms = np.linalg.norm(rows, axis=1)
        scores = np.abs(rows @ z)
        live = norms > ZERO_ROW_TOL
        scores = np.where(live, scores / np.where(live, norms, 1.0), -1.0)
        pick = rest[int(np.argmax(scores))]
        chosen.append(int(pick))
        in_set[pick] = True

    vertices = np.asarray(chosen, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cond = np.linalg.cond(U[np.ix_(vertices, range(count))])
    log_cond = float(np.log10(cond)) if np.isfinite(cond) else float("inf")
    return SamplingSet(vertices=vertices, log10_condition=log_cond, warned=warned)


def naive_log10_condition(basis: EigenBasis, count: int) -> float:
    """Conditioning of the system the codec would face if it sampled the
    reference view directly (its pixels are the first ``count`` vertices)."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cond = np.linalg.cond(basis.vectors[:count, :count])
    return float(np.log10(cond)) if np.isfinite(cond) else float("inf")


def build_correspondence(graph: SuperRayGraph) -> AngularChains:
    """Chain decomposition of the angular Laplacian."""
    n = graph.size
    _, chain = component_order(graph.angular)
    n_ref = graph.n_ref
    n_chains = int(chain.max()) + 1 if n else 0
    ref_partner_by_chain = np.full(n_chains, -1, dtype=np.int64)
    for v in range(n_ref - 1, -1, -1):
        ref_partner_by_chain[chain[v]] = v
    ref_partner = np.full(n, -1, dtype=np.int64)
    if n:
        ref_partner = ref_partner_by_chain[chain]
    return AngularChains(chain=chain, n_ref=n_ref, ref_partner=ref_partner)


def place_samples(chains: AngularChains, sample_vertices: np.ndarray) -> np.ndarray:
    """Map each sample to a reference-region pixel ordinal.

    Samples visit in selection order; one already in the reference view
    claims its own pixel, others follow their chain to its reference pixel.
    Taken or missing targets queue the sample, and the queue then fills the
    region's remaining pixels in raster order. The result is a bijection
    onto 0..n_ref-1, replayed identically by the decoder.
    """
    n_ref = chains.n_ref
    if len(sample_vertices) != n_ref:
        raise ValueError(
            f"{len(sample_vertices)} samples for a region of {n_ref} pixels")
    placement = np.full(n_ref, -1, dtype=np.int64)
    taken = np.zeros(n_ref, dtype=bool)
    queued = []
    for i, v in enumerate(sample_vertices):
        target = int(v) if v < n_ref else int(chains.ref_partner[v])
        if target >= 0 and not taken[target]:
            placement[i] = target
            taken[target] = True
        else:
            queued.append(i)
    spare = iter(np.flatnonzero(~taken))
    for i in queued:
        placement[i] = next(spare)
    return placement
