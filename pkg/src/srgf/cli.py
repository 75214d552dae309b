"""Command-line front end: encode, decode, and analyze subcommands.

Exit codes: 0 success, 2 bad input or configuration, 3 corrupt stream.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .entropy import encode_values
from .errors import InputError, PluginError, StreamError
from .lightfield import LightField, load_light_field, psnr, save_light_field
from .pipeline import CodecConfig, EncodeResult, decode, encode
from .quantization import effective_step, quantize

EXIT_INPUT = 2
EXIT_STREAM = 3


@dataclass
class ModeAnalysis:
    """Everything the analyze command measures for one transform mode."""

    mode: str
    result: EncodeResult
    psnr_db: float
    energy_fraction: float
    reference_bits: int
    dc_direct_bits: int


@dataclass
class AnalysisReport:
    grid_shape: tuple[int, int]
    view_shape: tuple[int, int]
    bitdepth: int
    q: float
    modes: list[ModeAnalysis]


def aggregate_energy_fraction(result: EncodeResult) -> float:
    """Coefficient-weighted mean of the per-super-ray predicted-band
    energy fractions."""
    weights = np.array([s.size for s in result.superrays], dtype=np.float64)
    fractions = np.array([s.energy_fraction for s in result.superrays])
    return float(weights @ fractions / weights.sum())


def direct_dc_bits(result: EncodeResult, q: float) -> int:
    """Cost of shipping the predicted-band coefficients themselves,
    quantized at the configured step and arithmetic-coded in one stream.
    This is the alternative the reference image replaces."""
    step = effective_step(q)
    values = [quantize(s.predicted_values, step) for s in result.superrays
              if s.predicted_values is not None and len(s.predicted_values)]
    if not values:
        return 0
    return 8 * len(encode_values(np.concatenate(values)))


def analyze_field(lf: LightField, disparity: np.ndarray | None,
                  config: CodecConfig) -> AnalysisReport:
    """Encode and decode the field in both modes and collect the
    compaction, conditioning, and payload measurements."""
    modes = []
    for mode in ("nonseparable", "separable"):
        cfg = CodecConfig(mode=mode, q=config.q, superrays=config.superrays,
                          slic_compactness=config.slic_compactness,
                          slic_iterations=config.slic_iterations,
                          vertex_cap=config.vertex_cap,
                          ref_codec=config.ref_codec,
                          plugin_encode=config.plugin_encode,
                          plugin_decode=config.plugin_decode,
                          threads=config.threads)
        result = encode(lf, disparity, cfg)
        decoded = decode(result.data, plugin_decode=cfg.plugin_decode,
                         threads=cfg.threads)
        modes.append(ModeAnalysis(
            mode=mode,
            result=result,
            psnr_db=psnr(lf, decoded),
            energy_fraction=aggregate_energy_fraction(result),
            reference_bits=8 * result.section_sizes["reference"],
            dc_direct_bits=direct_dc_bits(result, config.q)))
    return AnalysisReport(grid_shape=lf.grid_shape, view_shape=lf.view_shape,
                          bitdepth=lf.bitdepth, q=config.q, modes=modes)


def format_report(report: AnalysisReport) -> str:
    """Flat key/value rendering, one superray line per record."""
    lines = [
        f"grid = {report.grid_shape[0]} {report.grid_shape[1]}",
        f"view = {report.view_shape[0]} {report.view_shape[1]}",
        f"bitdepth = {report.bitdepth}",
        f"q = {report.q:g}",
    ]
    for ma in report.modes:
        p = f"mode.{ma.mode}"
        lines.append(f"{p}.superray_count = {len(ma.result.superrays)}")
        lines.append(f"{p}.bits_total = {ma.result.bits_total}")
        lines.append(f"{p}.bpp = {ma.result.bpp:.6f}")
        lines.append(f"{p}.psnr_db = {ma.psnr_db:.4f}")
        lines.append(f"{p}.energy_fraction = {ma.energy_fraction:.6f}")
        lines.append(f"{p}.reference_bits = {ma.reference_bits}")
        lines.append(f"{p}.dc_direct_bits = {ma.dc_direct_bits}")
        for name, size in ma.result.section_sizes.items():
            lines.append(f"{p}.section.{name} = {size}")
        conds = [s.log10_cond_sampled for s in ma.result.superrays
                 if s.log10_cond_sampled is not None]
        if conds:
            naive = [s.log10_cond_naive for s in ma.result.superrays]
            lines.append(f"{p}.log10_cond_sampled.max = {max(conds):.4f}")
            lines.append(f"{p}.log10_cond_sampled.median = "
                         f"{float(np.median(conds)):.4f}")
            lines.append(f"{p}.log10_cond_naive.max = {max(naive):.4f}")
            lines.append(f"{p}.log10_cond_naive.median = "
                         f"{float(np.median(naive)):.4f}")
        for s in ma.result.superrays:
            rec = (f"superray mode={ma.mode} label={s.label} size={s.size} "
                   f"n_ref={s.n_ref} class={s.coded_class} "
                   f"energy_fraction={s.energy_fraction:.6f}")
            if s.log10_cond_sampled is not None:
                rec += (f" log10_cond_sampled={s.log10_cond_sampled:.4f}"
                        f" log10_cond_naive={s.log10_cond_naive:.4f}")
            lines.append(rec)
    return "\n".join(lines) + "\n"


def format_tables(report: AnalysisReport) -> str:
    """Human-oriented summary printed by the analyze command."""
    out = [f"light field {report.grid_shape[0]}x{report.grid_shape[1]} views, "
           f"{report.view_shape[0]}x{report.view_shape[1]} pixels, "
           f"{report.bitdepth}-bit, q={report.q:g}", ""]
    out.append(f"{'mode':>13} {'energy%':>8} {'psnr dB':>8} {'bpp':>8} "
               f"{'ref bits':>9} {'dc bits':>9}")
    for ma in report.modes:
        out.append(f"{ma.mode:>13} {100 * ma.energy_fraction:>8.2f} "
                   f"{ma.psnr_db:>8.2f} {ma.result.bpp:>8.4f} "
                   f"{ma.reference_bits:>9} {ma.dc_direct_bits:>9}")
    nonsep = report.modes[0]
    conds = [s.log10_cond_sampled for s in nonsep.result.superrays
             if s.log10_cond_sampled is not None]
    if conds:
        naive = [s.log10_cond_naive for s in nonsep.result.superrays]
        out.append("")
        out.append(f"log10 condition, sampled: median "
                   f"{float(np.median(conds)):.2f}, max {max(conds):.2f}")
        out.append(f"log10 condition, naive:   median "
                   f"{float(np.median(naive)):.2f}, max {max(naive):.2f}")
    return "\n".join(out) + "\n"


def _parse_q(text: str) -> float:
    if text.strip().lower() == "bypass":
        return 0.0
    try:
        q = float(text)
    except ValueError:
        raise InputError(f"--q expects a number or 'bypass', got {text!r}")
    if q < 0:
        raise InputError(f"--q must be non-negative, got {q:g}")
    return q


def _load_disparity(path: str | None) -> np.ndarray | None:
    if path is None:
        return None
    try:
        return np.load(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: cannot load disparity map ({exc})") from exc


def _config_from(args: argparse.Namespace) -> CodecConfig:
    return CodecConfig(
        mode=getattr(args, "mode", "nonseparable"),
        q=_parse_q(args.q),
        superrays=args.superrays,
        slic_compactness=args.slic_compactness,
        ref_codec=args.ref_codec,
        plugin_encode=args.plugin_encode,
        plugin_decode=args.plugin_decode,
        threads=args.threads)


def cmd_encode(args: argparse.Namespace) -> int:
    lf = load_light_field(args.input)
    config = _config_from(args)
    started = time.perf_counter()
    result = encode(lf, _load_disparity(args.disparity), config)
    elapsed = time.perf_counter() - started
    Path(args.output).write_bytes(result.data)
    print(f"{args.output}: {len(result.data)} bytes, {result.bpp:.4f} bpp, "
          f"{elapsed:.2f} s")
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        raise InputError(f"{args.input}: cannot read stream ({exc})") from exc
    started = time.perf_counter()
    lf = decode(data, plugin_decode=args.plugin_decode, threads=args.threads)
    elapsed = time.perf_counter() - started
    save_light_field(lf, args.output)
    line = f"{args.output}: {lf.grid_shape[0]}x{lf.grid_shape[1]} views, {elapsed:.2f} s"
    if args.reference:
        reference = load_light_field(args.reference)
        line += f", psnr {psnr(reference, lf):.2f} dB"
    print(line)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    lf = load_light_field(args.input)
    report = analyze_field(lf, _load_disparity(args.disparity),
                           _config_from(args))
    print(format_tables(report), end="")
    if args.report:
        Path(args.report).write_text(format_report(report))
        print(f"report written to {args.report}")
    return 0


def _add_codec_flags(p: argparse.ArgumentParser, with_mode: bool) -> None:
    if with_mode:
        p.add_argument("--mode", choices=("nonseparable", "separable"),
                       default="nonseparable")
    p.add_argument("--q", default="1", metavar="REAL|bypass",
                   help="quantization step; 'bypass' or 0 for exact-lossless")
    p.add_argument("--superrays", type=int, default=4000,
                   help="target super-ray count (default 4000)")
    p.add_argument("--slic-compactness", type=float, default=10.0)
    p.add_argument("--ref-codec", choices=("builtin", "plugin"),
                   default="builtin")
    p.add_argument("--plugin-encode", metavar="CMD",
                   help="external encoder template with {in} and {out}")
    p.add_argument("--plugin-decode", metavar="CMD",
                   help="external decoder template with {in} and {out}")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--disparity", metavar="NPY",
                   help="disparity map (.npy); block matching when absent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srgf",
        description="Graph-transform light field codec over super-rays.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="compress a view directory")
    p.add_argument("input", help="directory with views and metadata.txt")
    p.add_argument("output", help="output stream path")
    _add_codec_flags(p, with_mode=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decompress a stream into views")
    p.add_argument("input", help="stream path")
    p.add_argument("output", help="output view directory")
    p.add_argument("--reference", metavar="DIR",
                   help="original views; prints PSNR when given")
    p.add_argument("--plugin-decode", metavar="CMD")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("analyze",
                       help="report compaction, conditioning, and payloads")
    p.add_argument("input", help="directory with views and metadata.txt")
    p.add_argument("--report", metavar="PATH",
                   help="write the flat key/value report here")
    _add_codec_flags(p, with_mode=False)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StreamError as exc:
        print(f"error: corrupt stream ({exc.section}): {exc}", file=sys.stderr)
        return EXIT_STREAM
    except (InputError, PluginError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
