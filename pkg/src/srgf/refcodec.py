"""Lossless reference-image coding.

The built-in codec is a classic predictive intra coder: every pixel is
predicted by the median/gradient-adjusted predictor from its west, north
and north-west neighbours, and the residual is arithmetic-coded with one
adaptive model per local-activity context. It is exactly lossless at any
supported bit depth.

An external command can be plugged in instead; it receives and returns PGM
files through placeholder-substituted templates, so any standalone image
codec (including a lossy one; the pipeline feeds its decoded output back)
can stand in for the built-in coder.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .entropy import (AdaptiveModel, ArithmeticDecoder, ArithmeticEncoder,
                      COEFF_ALPHABET, decode_value, encode_value)
from .errors import PluginError
from .lightfield import read_portable_map, write_portable_map

_ACTIVITY_EDGES = (0, 1, 2, 4, 8, 16, 32, 64)


def _predict(w: int, n: int, nw: int) -> int:
    if nw >= max(w, n):
        return min(w, n)
    if nw <= min(w, n):
        return max(w, n)
    return w + n - nw


def _context(w: int, n: int, nw: int) -> int:
    activity = abs(w - nw) + abs(nw - n)
    ctx = 0
    for edge in _ACTIVITY_EDGES[1:]:
        if activity >= edge:
            ctx += 1
    return ctx


def encode_builtin(image: np.ndarray, peak: int) -> bytes:
    image = np.asarray(image, dtype=np.int64)
    rows, cols = image.shape
    mid = (peak + 1) // 2
    enc = ArithmeticEncoder()
    models = [AdaptiveModel(COEFF_ALPHABET) for _ in _ACTIVITY_EDGES]
    for y in range(rows):
        for x in range(cols):
            if y == 0 and x == 0:
                pred, ctx = mid, 0
            elif y == 0:
                pred, ctx = image[0, x - 1], 0
            elif x == 0:
                pred, ctx = image[y - 1, 0], 0
            else:
                w = image[y, x - 1]
                n = image[y - 1, x]
                nw = image[y - 1, x - 1]
                pred = _predict(w, n, nw)
                ctx = _context(w, n, nw)
            encode_value(enc, models[ctx], int(image[y, x]) - int(pred))
    return enc.finish()


def decode_builtin(data: bytes, rows: int, cols: int, peak: int) -> np.ndarray:
    mid = (peak + 1) // 2
    dec = ArithmeticDecoder(data)
    models = [AdaptiveModel(COEFF_ALPHABET) for _ in _ACTIVITY_EDGES]
    image = np.zeros((rows, cols), dtype=np.int64)
    for y in range(rows):
        for x in range(cols):
            if y == 0 and x == 0:
                pred, ctx = mid, 0
            elif y == 0:
                pred, ctx = image[0, x - 1], 0
            elif x == 0:
                pred, ctx = image[y - 1, 0], 0
            else:
                w = image[y, x - 1]
                n = image[y - 1, x]
                nw = image[y - 1, x - 1]
                pred = _predict(w, n, nw)
                ctx = _context(w, n, nw)
            image[y, x] = int(pred) + decode_value(dec, models[ctx])
    return image


def _run_template(template: str, in_path: Path, out_path: Path) -> None:
    if "{in}" not in template or "{out}" not in template:
        raise PluginError(f"plugin template {template!r} must contain {{in}} and {{out}}")
    args = [a.replace("{in}", str(in_path)).replace("{out}", str(out_path))
            for a in shlex.split(template)]
    try:
        proc = subprocess.run(args, capture_output=True)
    except OSError as exc:
        raise PluginError(f"plugin command {args[0]!r} failed to start: {exc}") from exc
    if proc.returncode != 0:
        raise PluginError(
            f"plugin command {' '.join(args)} exited with {proc.returncode}: "
            f"{proc.stderr.decode(errors='replace')[:200]}")
    if not out_path.exists():
        raise PluginError(f"plugin command {' '.join(args)} produced no output file")


def encode_plugin(image: np.ndarray, peak: int, template: str) -> bytes:
    with tempfile.TemporaryDirectory(prefix="srgf-plugin-") as tmp:
        in_path = Path(tmp) / "input.pgm"
        out_path = Path(tmp) / "payload.bin"
        write_portable_map(in_path, image, peak)
        _run_template(template, in_path, out_path)
        return out_path.read_bytes()


def decode_plugin(payload: bytes, peak: int, template: str) -> np.ndarray:
    with tempfile.TemporaryDirectory(prefix="srgf-plugin-") as tmp:
        in_path = Path(tmp) / "payload.bin"
        out_path = Path(tmp) / "output.pgm"
        in_path.write_bytes(payload)
        _run_template(template, in_path, out_path)
        image, maxval = read_portable_map(out_path)
        if image.ndim != 2:
            raise PluginError("plugin decoder returned a colour image")
        if maxval != peak:
            raise PluginError(f"plugin decoder returned maxval {maxval}, expected {peak}")
        return image.astype(np.int64)
