"""Container format: fixed header plus length-prefixed sections.

Layout (all little-endian): the magic ``SRGF``, a version byte, the fixed
header fields below, then the sections in a fixed order, each as a 4-byte
length followed by its payload. Sections are self-delimiting so a decoder
can skip or validate them without decoding. The segmentation section only
exists in non-separable mode; the separable decoder re-derives the
segmentation from the decoded reference view instead.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .entropy import AdaptiveModel, ArithmeticDecoder, ArithmeticEncoder
from .errors import StreamError

MAGIC = b"SRGF"
VERSION = 1
GROUP_COUNT = 32
MODE_NONSEPARABLE = 0
MODE_SEPARABLE = 1
REF_BUILTIN = 0
REF_PLUGIN = 1
EIGENSOLVER_DENSE_SYMMETRIC = 1
GROUP_SCHEME_UNIFORM = 0
DISPARITY_DENOM = 16

_HEADER_FMT = "<4sBBHHHHBIIHIBBBdd"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)

MODE_NAMES = {MODE_NONSEPARABLE: "nonseparable", MODE_SEPARABLE: "separable"}


@dataclass
class Header:
    mode: int
    grid_rows: int
    grid_cols: int
    rows: int
    cols: int
    bitdepth: int
    label_count: int
    slic_target: int
    slic_iterations: int
    vertex_cap: int
    eigensolver: int
    group_scheme: int
    ref_codec: int
    q: float
    slic_compactness: float

    @property
    def mode_name(self) -> str:
        return MODE_NAMES[self.mode]


def section_names(mode: int) -> list[str]:
    names = ["disparity"]
    if mode == MODE_NONSEPARABLE:
        names.append("segmentation")
    names.extend(["reference", "classes"])
    names.extend(f"coefficients-{g}" for g in range(GROUP_COUNT))
    return names


def pack_header(h: Header) -> bytes:
    return struct.pack(
        _HEADER_FMT, MAGIC, VERSION, h.mode, h.grid_rows, h.grid_cols,
        h.rows, h.cols, h.bitdepth, h.label_count, h.slic_target,
        h.slic_iterations, h.vertex_cap, h.eigensolver, h.group_scheme,
        h.ref_codec, h.q, h.slic_compactness)


def unpack_header(data: bytes) -> Header:
    if len(data) < _HEADER_SIZE:
        raise StreamError("stream shorter than the fixed header", section="header")
    fields = struct.unpack_from(_HEADER_FMT, data)
    magic, version = fields[0], fields[1]
    if magic != MAGIC:
        raise StreamError(f"bad magic {magic!r}", section="header")
    if version != VERSION:
        raise StreamError(f"unsupported version {version}", section="header")
    h = Header(*fields[2:])
    if h.mode not in MODE_NAMES:
        raise StreamError(f"unknown mode {h.mode}", section="header")
    if h.bitdepth not in (8, 10):
        raise StreamError(f"bad bitdepth {h.bitdepth}", section="header")
    if min(h.grid_rows, h.grid_cols, h.rows, h.cols) < 1:
        raise StreamError("empty light field dimensions", section="header")
    if h.label_count < 1:
        raise StreamError("label count must be positive", section="header")
    if h.eigensolver != EIGENSOLVER_DENSE_SYMMETRIC:
        raise StreamError(f"unknown eigensolver id {h.eigensolver}", section="header")
    if h.group_scheme != GROUP_SCHEME_UNIFORM:
        raise StreamError(f"unknown grouping scheme {h.group_scheme}", section="header")
    if h.ref_codec not in (REF_BUILTIN, REF_PLUGIN):
        raise StreamError(f"unknown reference codec id {h.ref_codec}", section="header")
    if not (h.q >= 0.0):
        raise StreamError(f"bad quantisation step {h.q}", section="header")
    return h


def write_stream(header: Header, sections: dict) -> bytes:
    parts = [pack_header(header)]
    for name in section_names(header.mode):
        payload = sections[name]
        parts.append(struct.pack("<I", len(payload)))
        parts.append(payload)
    return b"".join(parts)


def read_stream(data: bytes) -> tuple[Header, dict]:
    header = unpack_header(data)
    pos = _HEADER_SIZE
    sections = {}
    for name in section_names(header.mode):
        if pos + 4 > len(data):
            raise StreamError(f"missing length prefix for section {name}", section=name)
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + length > len(data):
            raise StreamError(f"section {name} truncated", section=name)
        sections[name] = data[pos:pos + length]
        pos += length
    if pos != len(data):
        raise StreamError(f"{len(data) - pos} trailing bytes after last section",
                          section="trailer")
    return header, sections


# ---------------------------------------------------------------------------
# Segmentation payload: the label grid coded through neighbour-match events.
# Away from region boundaries a pixel repeats its west or north neighbour,
# so the event stream is dominated by two cheap symbols; fresh labels fall
# back to fixed-width literals.

_EV_W, _EV_N, _EV_NW, _EV_LIT = range(4)


def _label_bits(label_count: int) -> int:
    return max(1, int(label_count - 1).bit_length()) if label_count > 1 else 0


def encode_label_map(labels: np.ndarray, label_count: int) -> bytes:
    labels = np.asarray(labels, dtype=np.int64)
    rows, cols = labels.shape
    nbits = _label_bits(label_count)
    enc = ArithmeticEncoder()
    models = [AdaptiveModel(4), AdaptiveModel(4)]
    for y in range(rows):
        for x in range(cols):
            lab = labels[y, x]
            w = labels[y, x - 1] if x > 0 else -1
            n = labels[y - 1, x] if y > 0 else -1
            nw = labels[y - 1, x - 1] if x > 0 and y > 0 else -1
            ctx = 0 if (w >= 0 and w == n) else 1
            if lab == w:
                enc.encode(models[ctx], _EV_W)
            elif lab == n:
                enc.encode(models[ctx], _EV_N)
            elif lab == nw:
                enc.encode(models[ctx], _EV_NW)
            else:
                enc.encode(models[ctx], _EV_LIT)
                if nbits:
                    enc.encode_bits(int(lab) - 1, nbits)
    return enc.finish()


def decode_label_map(data: bytes, rows: int, cols: int, label_count: int) -> np.ndarray:
    nbits = _label_bits(label_count)
    dec = ArithmeticDecoder(data)
    models = [AdaptiveModel(4), AdaptiveModel(4)]
    labels = np.zeros((rows, cols), dtype=np.int64)
    for y in range(rows):
        for x in range(cols):
            w = labels[y, x - 1] if x > 0 else -1
            n = labels[y - 1, x] if y > 0 else -1
            nw = labels[y - 1, x - 1] if x > 0 and y > 0 else -1
            ctx = 0 if (w >= 0 and w == n) else 1
            event = dec.decode(models[ctx])
            if event == _EV_W:
                lab = w
            elif event == _EV_N:
                lab = n
            elif event == _EV_NW:
                lab = nw
            else:
                lab = (dec.decode_bits(nbits) + 1) if nbits else 1
            if not 1 <= lab <= label_count:
                raise StreamError("segmentation event references a missing neighbour",
                                  section="segmentation")
            labels[y, x] = lab
    return labels.astype(np.int32)
