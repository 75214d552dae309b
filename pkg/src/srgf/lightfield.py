"""Light field container, portable-map I/O and quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .util import round_half_away

DEFAULT_LAYOUT = "view_{m:02d}_{n:02d}.pgm"
METADATA_NAME = "metadata.txt"


@dataclass
class LightField:
    """An M x N grid of greyscale views, each S x T pixels.

    ``views`` has shape (M, N, S, T). Flattening it in C order numbers the
    rays as ``((m*N + n)*S + s)*T + t``; that linear index is the vertex
    identity used by every graph in the codec, so the axis order is part of
    the format and must not change.
    """

    views: np.ndarray
    bitdepth: int = 8

    def __post_init__(self):
        if self.views.ndim != 4:
            raise InputError(f"light field array must be 4-D, got shape {self.views.shape}")
        if self.bitdepth not in (8, 10):
            raise InputError(f"bitdepth must be 8 or 10, got {self.bitdepth}")

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.views.shape[0], self.views.shape[1]

    @property
    def view_shape(self) -> tuple[int, int]:
        return self.views.shape[2], self.views.shape[3]

    @property
    def peak(self) -> int:
        return (1 << self.bitdepth) - 1

    def rays(self) -> np.ndarray:
        """All ray values as one flat vector, indexed by ray linear index."""
        return self.views.reshape(-1)


@dataclass
class QualityReport:
    psnr_db: float
    bits_total: int
    bpp: float


def _storage_dtype(bitdepth: int):
    return np.uint8 if bitdepth <= 8 else np.uint16


def luminance(rgb: np.ndarray, peak: int) -> np.ndarray:
    """Integer-rounded BT.601 luminance of an (..., 3) colour array."""
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(round_half_away(y), 0, peak)


def _next_token(f, path: Path) -> bytes:
    """Next whitespace-delimited header token, skipping '#' comments."""
    token = b""
    while True:
        ch = f.read(1)
        if ch == b"":
            if token:
                return token
            raise InputError(f"{path}: truncated portable-map header")
        if ch == b"#":
            while ch not in (b"", b"\n", b"\r"):
                ch = f.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def read_portable_map(path: Path) -> tuple[np.ndarray, int]:
    """Read a binary PGM (P5) or PPM (P6) file.

    Returns ``(image, maxval)`` where the image is 2-D for PGM and
    (rows, cols, 3) for PPM. Samples above 255 are stored most significant
    byte first, as the format requires.
    """
    path = Path(path)
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise InputError(f"{path}: cannot open view file ({exc})") from exc
    with f:
        magic = _next_token(f, path)
        if magic not in (b"P5", b"P6"):
            raise InputError(f"{path}: unsupported magic {magic!r}, expected P5 or P6")
        try:
            cols = int(_next_token(f, path))
            rows = int(_next_token(f, path))
            maxval = int(_next_token(f, path))
        except ValueError as exc:
            raise InputError(f"{path}: malformed portable-map header") from exc
        if not (0 < maxval < 65536):
            raise InputError(f"{path}: maxval {maxval} out of range")
        channels = 1 if magic == b"P5" else 3
        count = rows * cols * channels
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = f.read(count * dtype.itemsize)
        if len(raw) != count * dtype.itemsize:
            raise InputError(f"{path}: pixel data truncated")
        data = np.frombuffer(raw, dtype=dtype).astype(np.uint16 if maxval > 255 else np.uint8)
    shape = (rows, cols) if channels == 1 else (rows, cols, 3)
    return data.reshape(shape), maxval


def write_portable_map(path: Path, image: np.ndarray, maxval: int) -> None:
    """Write a 2-D array as a binary PGM (P5) file."""
    image = np.asarray(image)
    rows, cols = image.shape
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n%d\n" % (cols, rows, maxval))
        f.write(np.ascontiguousarray(image.astype(dtype)).tobytes())


def _read_metadata(directory: Path) -> dict:
    meta_path = directory / METADATA_NAME
    try:
        text = meta_path.read_text()
    except OSError as exc:
        raise InputError(f"{meta_path}: cannot read metadata ({exc})") from exc
    fields = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("=", " ").replace(":", " ").split()
        if len(parts) != 2:
            raise InputError(f"{meta_path}: malformed metadata line {line!r}")
        fields[parts[0].lower()] = parts[1]
    out = {}
    for key in ("rows", "cols", "bitdepth"):
        if key not in fields:
            raise InputError(f"{meta_path}: missing metadata key {key!r}")
        try:
            out[key] = int(fields[key])
        except ValueError as exc:
            raise InputError(f"{meta_path}: metadata key {key!r} is not an integer") from exc
    return out


def load_light_field(directory, layout: str = DEFAULT_LAYOUT) -> LightField:
    """Load a view directory into a LightField.

    ``layout`` is a format template with ``{m}``/``{n}`` angular indices.
    Colour views are reduced to BT.601 luminance on load.
    """
    directory = Path(directory)
    meta = _read_metadata(directory)
    grid_rows, grid_cols, bitdepth = meta["rows"], meta["cols"], meta["bitdepth"]
    if grid_rows < 1 or grid_cols < 1:
        raise InputError(f"{directory / METADATA_NAME}: view grid {grid_rows}x{grid_cols} is empty")
    if bitdepth not in (8, 10):
        raise InputError(f"{directory / METADATA_NAME}: bitdepth must be 8 or 10, got {bitdepth}")
    peak = (1 << bitdepth) - 1

    views = None
    for m in range(grid_rows):
        for n in range(grid_cols):
            path = directory / layout.format(m=m, n=n)
            if not path.exists():
                raise InputError(f"{path}: missing view for angular position ({m}, {n})")
            image, maxval = read_portable_map(path)
            if maxval != peak:
                raise InputError(
                    f"{path}: maxval {maxval} does not match metadata bitdepth {bitdepth}")
            if image.ndim == 3:
                image = luminance(image.astype(np.float64), peak)
            if views is None:
                views = np.empty((grid_rows, grid_cols) + image.shape,
                                 dtype=_storage_dtype(bitdepth))
            if image.shape != views.shape[2:]:
                raise InputError(
                    f"{path}: view shape {image.shape} differs from {views.shape[2:]}")
            views[m, n] = image
    return LightField(views=views, bitdepth=bitdepth)


def save_light_field(lf: LightField, directory, layout: str = DEFAULT_LAYOUT) -> None:
    """Write all views plus the metadata file; inverse of load_light_field."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    grid_rows, grid_cols = lf.grid_shape
    for m in range(grid_rows):
        for n in range(grid_cols):
            write_portable_map(directory / layout.format(m=m, n=n), lf.views[m, n], lf.peak)
    (directory / METADATA_NAME).write_text(
        f"rows {grid_rows}\ncols {grid_cols}\nbitdepth {lf.bitdepth}\n")


def psnr(reference: LightField, test: LightField) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical fields."""
    if reference.views.shape != test.views.shape:
        raise InputError(
            f"shape mismatch {reference.views.shape} vs {test.views.shape}")
    if reference.bitdepth != test.bitdepth:
        raise InputError(
            f"bitdepth mismatch {reference.bitdepth} vs {test.bitdepth}")
    diff = reference.views.astype(np.float64) - test.views.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(reference.peak ** 2 / mse)
