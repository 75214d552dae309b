"""Spatio-angular prediction of transform coefficients.

Two schemes share the same idea: the receiver knows the sampled rays (they
travel inside the coded reference image) and the high-frequency residuals,
and recovers the missing low-frequency coefficients by solving a small
linear system instead of receiving them.

Non-separable scheme: one graph per super-ray. With T the first n_k
spectral indices and S the sampled vertices,

    x(S) = U(S, T) x_hat(T) + U(S, T_c) x_hat(T_c)

is solved for ``x_hat(T)``, then the unsampled vertices follow from the
same expansion evaluated on their rows.

Separable scheme: a spatial basis per view, then for every spatial
frequency band an angular basis over the views containing that band. Only
the band's first angular coefficient is predicted, from the reference
view's spatial coefficient; everything else in the band is transmitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import SingularSystemError
from .graphs import EigenBasis, SuperRayGraph, eigendecompose

DC_TOL = 1e-12


def predict_low_frequencies(basis: EigenBasis, sample_vertices: np.ndarray,
                            samples: np.ndarray, hf: np.ndarray,
                            label: int = 0) -> np.ndarray:
    """Solve for the first ``len(sample_vertices)`` spectral coefficients."""
    count = len(sample_vertices)
    U = basis.vectors
    lead = U[np.ix_(sample_vertices, range(count))]
    rhs = samples - U[sample_vertices, count:] @ hf
    try:
        return np.linalg.solve(lead, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"super-ray {label}: sampled sub-basis is singular", label) from exc


def reconstruct_signal(basis: EigenBasis, sample_vertices: np.ndarray,
                       samples: np.ndarray, low: np.ndarray,
                       hf: np.ndarray) -> np.ndarray:
    """Full vertex signal: sampled values pass through untouched, the rest
    come from the completed spectrum."""
    n = basis.vectors.shape[0]
    count = len(sample_vertices)
    out = np.empty(n, dtype=np.float64)
    mask = np.zeros(n, dtype=bool)
    mask[sample_vertices] = True
    rest = ~mask
    out[sample_vertices] = samples
    out[rest] = basis.vectors[rest, :count] @ low + basis.vectors[rest, count:] @ hf
    return out


# ---------------------------------------------------------------------------
# Separable scheme


@dataclass
class SeparableTransform:
    """Per-super-ray plumbing for the separable scheme.

    ``view_ids`` are the raster ids of views the super-ray touches, with
    per-view vertex index lists (into the graph's vertex order), spatial
    eigenbases and sizes. Band ``b`` lives in the views with more than ``b``
    pixels; ``band_members`` indexes those views into ``view_ids`` and
    ``band_offsets`` locates each band inside the concatenated coefficient
    vector, whose total length equals the super-ray's vertex count.
    """

    label: int
    view_ids: np.ndarray
    view_vertex: list
    spatial_bases: list
    sizes: np.ndarray
    band_members: list
    band_offsets: np.ndarray
    angular_bases: list

    @property
    def coefficient_count(self) -> int:
        return int(self.band_offsets[-1])

    def predicted_mask(self) -> np.ndarray:
        """Positions recovered by prediction instead of transmission: the
        first angular coefficient of every band whose leading view is the
        reference view."""
        mask = np.zeros(self.coefficient_count, dtype=bool)
        for b, members in enumerate(self.band_members):
            if self.view_ids[members[0]] == 0:
                mask[self.band_offsets[b]] = True
        return mask


def _angular_laplacian(positions: np.ndarray, grid_cols: int) -> sparse.csr_matrix:
    """Unweighted Laplacian of the view grid restricted to ``positions``
    (view raster ids); views are adjacent when they touch in the grid."""
    n = positions % grid_cols
    count = len(positions)
    ei, ej = [], []
    index = {int(p): i for i, p in enumerate(positions)}
    for i in range(count):
        if n[i] + 1 < grid_cols:
            j = index.get(int(positions[i]) + 1)
            if j is not None:
                ei.append(i)
                ej.append(j)
        j = index.get(int(positions[i]) + grid_cols)
        if j is not None:
            ei.append(i)
            ej.append(j)
    ones = np.ones(len(ei))
    ei = np.asarray(ei, dtype=np.int64)
    ej = np.asarray(ej, dtype=np.int64)
    rows = np.concatenate([ei, ej, ei, ej])
    cols = np.concatenate([ej, ei, ei, ej])
    vals = np.concatenate([-ones, -ones, ones, ones])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(count, count)).tocsr()


def build_separable(graph: SuperRayGraph, label: int | None = None) -> SeparableTransform:
    """Spatial bases, band membership and angular bases for one super-ray."""
    view_ids, starts = np.unique(graph.view, return_index=True)
    order = np.argsort(starts)
    view_ids = view_ids[order]
    view_vertex = [np.flatnonzero(graph.view == v) for v in view_ids]
    sizes = np.array([len(idx) for idx in view_vertex], dtype=np.int64)
    spatial_bases = [
        eigendecompose(graph.spatial[np.ix_(idx, idx)]) for idx in view_vertex
    ]
    band_count = int(sizes.max())
    band_members = [np.flatnonzero(sizes > b) for b in range(band_count)]
    band_sizes = np.array([len(m) for m in band_members], dtype=np.int64)
    band_offsets = np.concatenate([[0], np.cumsum(band_sizes)])

    grid_cols = graph.grid_shape[1]
    cache: dict[tuple, EigenBasis] = {}
    angular_bases = []
    for members in band_members:
        key = tuple(view_ids[members])
        if key not in cache:
            cache[key] = eigendecompose(_angular_laplacian(view_ids[members], grid_cols))
        angular_bases.append(cache[key])
    return SeparableTransform(
        label=graph.label if label is None else label,
        view_ids=view_ids,
        view_vertex=view_vertex,
        spatial_bases=spatial_bases,
        sizes=sizes,
        band_members=band_members,
        band_offsets=band_offsets,
        angular_bases=angular_bases,
    )


def spatial_spectra(ctx: SeparableTransform, values: np.ndarray) -> list:
    """Per-view spatial transforms of a vertex signal."""
    return [ctx.spatial_bases[i].vectors.T @ values[ctx.view_vertex[i]]
            for i in range(len(ctx.view_ids))]


def separable_forward(ctx: SeparableTransform, spectra: list) -> np.ndarray:
    """Angular transform of every band; returns the concatenated
    spatio-angular coefficient vector."""
    out = np.empty(ctx.coefficient_count, dtype=np.float64)
    for b, members in enumerate(ctx.band_members):
        band = np.array([spectra[i][b] for i in members])
        out[ctx.band_offsets[b]:ctx.band_offsets[b + 1]] = \
            ctx.angular_bases[b].vectors.T @ band
    return out


def predict_dc_band(angular: EigenBasis, ref_coeff: float, ac: np.ndarray,
                    label: int = 0) -> float:
    """First angular coefficient of a band from the reference view's spatial
    coefficient and the band's remaining (transmitted) coefficients."""
    lead = angular.vectors[0, 0]
    if abs(lead) < DC_TOL:
        raise SingularSystemError(
            f"super-ray {label}: reference view decoupled from band graph", label)
    return float((ref_coeff - angular.vectors[0, 1:] @ ac) / lead)


def reconstruct_band(angular: EigenBasis, coeffs: np.ndarray) -> np.ndarray:
    """Inverse angular transform of one band."""
    return angular.vectors @ coeffs


def separable_decode(ctx: SeparableTransform, y: np.ndarray,
                     ref_spectrum: np.ndarray) -> list:
    """Rebuild the per-view spatial spectra from coefficients and the
    reference view's own (exactly known) spatial spectrum.

    ``y`` holds the transmitted coefficient vector with zeros at discarded
    positions; predicted positions are recomputed here, not read. Views
    other than the reference get their spectra filled band by band.
    """
    spectra = [np.zeros(s, dtype=np.float64) for s in ctx.sizes]
    for b, members in enumerate(ctx.band_members):
        lo, hi = ctx.band_offsets[b], ctx.band_offsets[b + 1]
        coeffs = y[lo:hi].copy()
        if ctx.view_ids[members[0]] == 0:
            coeffs[0] = predict_dc_band(ctx.angular_bases[b], ref_spectrum[b],
                                        coeffs[1:], ctx.label)
        band = reconstruct_band(ctx.angular_bases[b], coeffs)
        for pos, i in enumerate(members):
            spectra[i][b] = band[pos]
    if ctx.view_ids[0] == 0:
        spectra[0] = np.asarray(ref_spectrum, dtype=np.float64)
    return spectra


def separable_inverse_views(ctx: SeparableTransform, spectra: list,
                            out: np.ndarray) -> None:
    """Invert the spatial transforms of every non-reference view into the
    vertex-signal buffer ``out`` (reference-view entries are left alone)."""
    for i in range(len(ctx.view_ids)):
        if ctx.view_ids[i] == 0:
            continue
        out[ctx.view_vertex[i]] = ctx.spatial_bases[i].vectors @ spectra[i]
