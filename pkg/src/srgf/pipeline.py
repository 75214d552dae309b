"""End-to-end encoding and decoding pipelines.

The decoder re-derives everything that is not transmitted: super-ray
projection, graphs, eigenbases, sampling sets and sample placement all come
from the segmentation and the per-label disparities, through the same
deterministic code the encoder ran. The bitstream therefore carries only
the per-label disparities, the segmentation (non-separable mode), the coded
reference image, the class flags and the surviving quantised coefficients.

Drift control: whatever the decoder will see of the reference image is what
the encoder feeds into its own forward transforms, so with exact
coefficients the two ends would compute identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bitstream as bs
from .disparity import estimate_disparity
from .entropy import decode_values, decode_symbols, encode_values, encode_symbols
from .errors import InputError, StreamError
from .graphs import build_graphs, eigendecompose
from .lightfield import LightField
from .prediction import (build_separable, predict_low_frequencies,
                         reconstruct_signal, separable_decode,
                         separable_forward, separable_inverse_views,
                         spatial_spectra)
from .quantization import (CLASS_COUNT, assign_classes, class_cut, dequantize,
                           effective_step, quantize)
from .refcodec import (decode_builtin, decode_plugin, encode_builtin,
                       encode_plugin)
from .sampling import (build_correspondence, centroid_seed,
                       naive_log10_condition, place_samples,
                       select_sampling_set)
from .segmentation import (median_disparity, project_superrays, slic_segment,
                           split_oversized)
from .util import parallel_map, round_half_away


@dataclass
class CodecConfig:
    mode: str = "nonseparable"
    q: float = 1.0
    superrays: int = 4000
    slic_compactness: float = 10.0
    slic_iterations: int = 10
    vertex_cap: int = 20000
    ref_codec: str = "builtin"
    plugin_encode: str | None = None
    plugin_decode: str | None = None
    threads: int = 1

    def mode_id(self) -> int:
        if self.mode == "nonseparable":
            return bs.MODE_NONSEPARABLE
        if self.mode == "separable":
            return bs.MODE_SEPARABLE
        raise InputError(f"unknown mode {self.mode!r}")


@dataclass
class SuperRayStats:
    label: int
    size: int
    n_ref: int
    coded_class: int
    predicted_energy: float
    total_energy: float
    log10_cond_sampled: float | None = None
    log10_cond_naive: float | None = None
    sampling_warned: bool = False
    predicted_values: np.ndarray | None = field(default=None, repr=False)

    @property
    def energy_fraction(self) -> float:
        if self.total_energy <= 0.0:
            return 1.0
        return self.predicted_energy / self.total_energy


@dataclass
class EncodeResult:
    data: bytes
    header: bs.Header
    section_sizes: dict
    superrays: list[SuperRayStats] = field(repr=False)

    @property
    def bits_total(self) -> int:
        return 8 * len(self.data)

    @property
    def bpp(self) -> float:
        h = self.header
        return self.bits_total / (h.grid_rows * h.grid_cols * h.rows * h.cols)


def _derive_labels(view: np.ndarray, k_target: int, compactness: float,
                   iterations: int, view_count: int, vertex_cap: int) -> np.ndarray:
    k_target = max(1, min(k_target, view.size))
    labels = slic_segment(view, k_target, compactness, iterations)
    return split_oversized(labels, view_count, vertex_cap)


def _encode_reference(image: np.ndarray, peak: int, config: CodecConfig):
    if config.ref_codec == "builtin":
        return encode_builtin(image, peak), np.asarray(image, dtype=np.int64)
    if config.ref_codec != "plugin":
        raise InputError(f"unknown reference codec {config.ref_codec!r}")
    if not config.plugin_encode or not config.plugin_decode:
        raise InputError("plugin reference codec needs both --plugin-encode and "
                         "--plugin-decode command templates")
    payload = encode_plugin(image, peak, config.plugin_encode)
    decoded = decode_plugin(payload, peak, config.plugin_decode)
    if decoded.shape != image.shape:
        raise InputError(f"plugin round trip changed the image shape "
                         f"{image.shape} -> {decoded.shape}")
    return payload, decoded


def _decode_reference(payload: bytes, rows: int, cols: int, peak: int,
                      ref_codec: int, plugin_decode: str | None) -> np.ndarray:
    if ref_codec == bs.REF_BUILTIN:
        return decode_builtin(payload, rows, cols, peak)
    if plugin_decode is None:
        raise InputError("stream was coded with a plugin reference codec; "
                         "pass --plugin-decode to decode it")
    decoded = decode_plugin(payload, peak, plugin_decode)
    if decoded.shape != (rows, cols):
        raise StreamError(f"plugin returned shape {decoded.shape}, "
                          f"expected {(rows, cols)}", section="reference")
    return decoded


def _transmitted_positions(count: int, predicted: np.ndarray, cls: int) -> np.ndarray:
    """Coefficient positions that actually travel in the stream: everything
    except predicted positions and the class-discarded tail."""
    zero = np.zeros(count, dtype=bool)
    cut = class_cut(count, cls)
    if cut:
        zero[count - cut:] = True
    send = ~predicted & ~zero
    return np.flatnonzero(send)


def _groups_of(positions: np.ndarray, count: int) -> np.ndarray:
    return (bs.GROUP_COUNT * positions) // count


def _quantized_medians(labels: np.ndarray, disparity: np.ndarray):
    med_raw = median_disparity(labels, disparity)
    syms = round_half_away(med_raw * bs.DISPARITY_DENOM)
    syms[0] = 0
    return syms, syms.astype(np.float64) / bs.DISPARITY_DENOM


def _header_for(lf: LightField, config: CodecConfig, label_count: int) -> bs.Header:
    return bs.Header(
        mode=config.mode_id(),
        grid_rows=lf.grid_shape[0],
        grid_cols=lf.grid_shape[1],
        rows=lf.view_shape[0],
        cols=lf.view_shape[1],
        bitdepth=lf.bitdepth,
        label_count=label_count,
        slic_target=max(1, min(config.superrays, lf.view_shape[0] * lf.view_shape[1])),
        slic_iterations=config.slic_iterations,
        vertex_cap=config.vertex_cap,
        eigensolver=bs.EIGENSOLVER_DENSE_SYMMETRIC,
        group_scheme=bs.GROUP_SCHEME_UNIFORM,
        ref_codec=bs.REF_BUILTIN if config.ref_codec == "builtin" else bs.REF_PLUGIN,
        q=float(config.q),
        slic_compactness=config.slic_compactness,
    )


def _classify(spectra, q):
    # Discarding a quiet tail is what makes classes 1..3 lossy; in bypass
    # mode every coefficient must survive, so everything is coded class 4.
    if q == 0.0:
        return np.full(len(spectra), CLASS_COUNT, dtype=np.int64)
    return assign_classes(spectra)


def _pack_groups(spectra, predicted_masks, classes, step):
    """Quantise every super-ray's transmitted coefficients and bucket them
    into the 32 normalised-position groups, in (super-ray, position) order."""
    groups = [[] for _ in range(bs.GROUP_COUNT)]
    for y, pred, cls in zip(spectra, predicted_masks, classes):
        n = len(y)
        send = _transmitted_positions(n, pred, int(cls))
        if len(send) == 0:
            continue
        symbols = quantize(y[send], step)
        for g, s in zip(_groups_of(send, n), symbols):
            groups[g].append(int(s))
    return groups


def _unpack_groups(sections, counts):
    streams = []
    for g in range(bs.GROUP_COUNT):
        streams.append(decode_values(sections[f"coefficients-{g}"], counts[g]))
    return streams


def encode(lf: LightField, disparity: np.ndarray | None = None,
           config: CodecConfig | None = None) -> EncodeResult:
    """Encode a light field into one self-contained byte stream."""
    config = config or CodecConfig()
    mode = config.mode_id()
    step = effective_step(config.q)
    if disparity is None:
        disparity = estimate_disparity(lf)
    disparity = np.asarray(disparity, dtype=np.float64)
    if disparity.shape != lf.view_shape:
        raise InputError(f"disparity shape {disparity.shape} does not match "
                         f"views {lf.view_shape}")

    grid_rows, grid_cols = lf.grid_shape
    view_count = grid_rows * grid_cols
    peak = lf.peak
    rays = lf.rays().astype(np.float64)
    sections = {}

    if mode == bs.MODE_SEPARABLE:
        # The reference view is coded as-is; its decoded version drives the
        # segmentation so the decoder can reproduce it exactly.
        ref_payload, ref_decoded = _encode_reference(lf.views[0, 0], peak, config)
        labels = _derive_labels(ref_decoded, config.superrays,
                                config.slic_compactness, config.slic_iterations,
                                view_count, config.vertex_cap)
    else:
        labels = _derive_labels(lf.views[0, 0], config.superrays,
                                config.slic_compactness, config.slic_iterations,
                                view_count, config.vertex_cap)

    disp_syms, med = _quantized_medians(labels, disparity)
    label_count = len(med) - 1
    srmap = project_superrays(labels, med, (grid_rows, grid_cols))
    graphs = build_graphs(srmap)
    sections["disparity"] = encode_values(disp_syms[1:])

    stats: list[SuperRayStats] = []

    if mode == bs.MODE_NONSEPARABLE:
        sections["segmentation"] = bs.encode_label_map(labels, label_count)
        bases = parallel_map(lambda g: eigendecompose(g.laplacian), graphs,
                             config.threads)
        sets = parallel_map(
            lambda gb: select_sampling_set(gb[1], gb[0].n_ref, centroid_seed(gb[0])),
            zip(graphs, bases), config.threads)
        placements = [place_samples(build_correspondence(g), ss.vertices)
                      for g, ss in zip(graphs, sets)]

        ref_img = np.zeros(lf.view_shape, dtype=np.int64)
        for g, ss, pl in zip(graphs, sets, placements):
            ref_img[g.srow[pl], g.scol[pl]] = rays[g.vertices[ss.vertices]]
        ref_payload, ref_decoded = _encode_reference(ref_img, peak, config)
        sections["reference"] = ref_payload

        def forward(args):
            g, basis, ss, pl = args
            x = rays[g.vertices].copy()
            x[ss.vertices] = ref_decoded[g.srow[pl], g.scol[pl]]
            return basis.vectors.T @ x

        spectra = parallel_map(forward, zip(graphs, bases, sets, placements),
                               config.threads)
        predicted_masks = []
        for g, y in zip(graphs, spectra):
            mask = np.zeros(g.size, dtype=bool)
            mask[: g.n_ref] = True
            predicted_masks.append(mask)
        classes = _classify(spectra, config.q)
        for g, basis, ss, y, cls in zip(graphs, bases, sets, spectra, classes):
            low = y[: g.n_ref]
            stats.append(SuperRayStats(
                label=g.label, size=g.size, n_ref=g.n_ref, coded_class=int(cls),
                predicted_energy=float(low @ low), total_energy=float(y @ y),
                log10_cond_sampled=ss.log10_condition,
                log10_cond_naive=naive_log10_condition(basis, g.n_ref),
                sampling_warned=ss.warned, predicted_values=low))
    else:
        sections["reference"] = ref_payload
        ctxs = parallel_map(build_separable, graphs, config.threads)

        def forward(args):
            g, ctx = args
            x = rays[g.vertices].copy()
            x[: g.n_ref] = ref_decoded[g.srow[: g.n_ref], g.scol[: g.n_ref]]
            return separable_forward(ctx, spatial_spectra(ctx, x))

        spectra = parallel_map(forward, zip(graphs, ctxs), config.threads)
        predicted_masks = [ctx.predicted_mask() for ctx in ctxs]
        classes = _classify(spectra, config.q)
        for g, ctx, y, pred, cls in zip(graphs, ctxs, spectra, predicted_masks,
                                        classes):
            low = y[pred]
            stats.append(SuperRayStats(
                label=g.label, size=g.size, n_ref=g.n_ref, coded_class=int(cls),
                predicted_energy=float(low @ low), total_energy=float(y @ y),
                predicted_values=low))

    sections["classes"] = encode_symbols(classes - 1, 4)
    groups = _pack_groups(spectra, predicted_masks, classes, step)
    for g in range(bs.GROUP_COUNT):
        sections[f"coefficients-{g}"] = encode_values(groups[g])

    header = _header_for(lf, config, label_count)
    data = bs.write_stream(header, sections)
    return EncodeResult(
        data=data,
        header=header,
        section_sizes={name: len(sections[name]) for name in bs.section_names(mode)},
        superrays=stats,
    )


def decode(data: bytes, plugin_decode: str | None = None,
           threads: int = 1) -> LightField:
    """Decode a byte stream back into a light field."""
    header, sections = bs.read_stream(data)
    grid_rows, grid_cols = header.grid_rows, header.grid_cols
    rows, cols = header.rows, header.cols
    peak = (1 << header.bitdepth) - 1
    k = header.label_count
    step = effective_step(header.q)

    try:
        disp_syms = np.array([0] + decode_values(sections["disparity"], k),
                             dtype=np.int64)
    except StreamError:
        raise
    except Exception as exc:
        raise StreamError(f"disparity section undecodable: {exc}",
                          section="disparity") from exc
    med = disp_syms.astype(np.float64) / bs.DISPARITY_DENOM

    ref_decoded = _decode_reference(sections["reference"], rows, cols, peak,
                                    header.ref_codec, plugin_decode)

    if header.mode == bs.MODE_NONSEPARABLE:
        labels = bs.decode_label_map(sections["segmentation"], rows, cols, k)
        if labels.max() > k:
            raise StreamError("segmentation labels exceed the header count",
                              section="segmentation")
    else:
        labels = _derive_labels(ref_decoded, header.slic_target,
                                header.slic_compactness, header.slic_iterations,
                                grid_rows * grid_cols, header.vertex_cap)
        if labels.max() != k:
            raise StreamError(
                f"re-derived segmentation has {labels.max()} labels, "
                f"header says {k}", section="header")

    srmap = project_superrays(labels, med, (grid_rows, grid_cols))
    graphs = build_graphs(srmap)
    classes = np.array(decode_symbols(sections["classes"], k, 4)) + 1

    out = np.zeros(grid_rows * grid_cols * rows * cols, dtype=np.float64)

    if header.mode == bs.MODE_NONSEPARABLE:
        bases = parallel_map(lambda g: eigendecompose(g.laplacian), graphs, threads)
        sets = parallel_map(
            lambda gb: select_sampling_set(gb[1], gb[0].n_ref, centroid_seed(gb[0])),
            zip(graphs, bases), threads)
        placements = [place_samples(build_correspondence(g), ss.vertices)
                      for g, ss in zip(graphs, sets)]
        predicted_masks = []
        for g in graphs:
            mask = np.zeros(g.size, dtype=bool)
            mask[: g.n_ref] = True
            predicted_masks.append(mask)
    else:
        ctxs = parallel_map(build_separable, graphs, threads)
        predicted_masks = [ctx.predicted_mask() for ctx in ctxs]

    send_lists = [
        _transmitted_positions(g.size, pred, int(cls))
        for g, pred, cls in zip(graphs, predicted_masks, classes)
    ]
    counts = [0] * bs.GROUP_COUNT
    for g_obj, send in zip(graphs, send_lists):
        for grp in _groups_of(send, g_obj.size):
            counts[grp] += 1
    streams = _unpack_groups(sections, counts)
    cursors = [0] * bs.GROUP_COUNT

    for idx, graph in enumerate(graphs):
        n = graph.size
        y = np.zeros(n, dtype=np.float64)
        send = send_lists[idx]
        if len(send):
            syms = np.empty(len(send), dtype=np.int64)
            for j, grp in enumerate(_groups_of(send, n)):
                syms[j] = streams[grp][cursors[grp]]
                cursors[grp] += 1
            y[send] = dequantize(syms, step)

        if header.mode == bs.MODE_NONSEPARABLE:
            ss = sets[idx]
            pl = placements[idx]
            samples = ref_decoded[graph.srow[pl], graph.scol[pl]].astype(np.float64)
            low = predict_low_frequencies(bases[idx], ss.vertices, samples,
                                          y[graph.n_ref:], graph.label)
            x = reconstruct_signal(bases[idx], ss.vertices, samples, low,
                                   y[graph.n_ref:])
        else:
            ctx = ctxs[idx]
            refvals = ref_decoded[graph.srow[: graph.n_ref],
                                  graph.scol[: graph.n_ref]].astype(np.float64)
            ref_spec = ctx.spatial_bases[0].vectors.T @ refvals
            spectra = separable_decode(ctx, y, ref_spec)
            x = np.empty(n, dtype=np.float64)
            x[: graph.n_ref] = refvals
            separable_inverse_views(ctx, spectra, x)
        out[graph.vertices] = x

    pixels = np.clip(round_half_away(out), 0, peak)
    dtype = np.uint8 if header.bitdepth <= 8 else np.uint16
    views = pixels.astype(dtype).reshape(grid_rows, grid_cols, rows, cols)
    return LightField(views=views, bitdepth=header.bitdepth)
