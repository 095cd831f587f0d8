"""Command-line entry point: ``domatch {match,adapt,metrics,bench}``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or config error.
Values go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adapt import adapt_reference
from .features import PatchGeometry, features_to_image, image_to_features
from .harness import ConfigError, run_bench
from .image import RasterError, load_raster, luma_y, read_float_dump, save_raster, to_grayscale, write_float_dump
from .matching import color_correspond, gray_correspond, match_quality, reconstruct_matched
from .metrics import psnr, report, ssim, ssim_s
from .numerics import feature_stats


class UsageError(Exception):
    pass


def _load(path: str) -> np.ndarray:
    if path.endswith(".rmfp"):
        return features_to_image(read_float_dump(path), clip=False)
    return load_raster(path)


def _gray(img: np.ndarray) -> np.ndarray:
    return to_grayscale(img) if img.shape[2] == 3 else img


def cmd_match(args) -> int:
    lr = _load(args.input)
    ref = _load(args.ref)
    try:
        gq = PatchGeometry.for_shape(lr.shape[0], lr.shape[1], args.patch, args.stride)
        gr = PatchGeometry.for_shape(ref.shape[0], ref.shape[1], args.patch, args.stride)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not args.gray and lr.shape[2] != ref.shape[2]:
        raise UsageError("color matching needs equal channel counts (or use --gray)")
    matcher = gray_correspond if args.gray else color_correspond
    result = matcher(lr, ref, gq, gr)
    matched = reconstruct_matched(result, ref, gr)
    save_raster(matched, args.out)
    value = match_quality(_gray(lr), _gray(matched))
    if args.report:
        doc = {
            "gray_matching": bool(args.gray),
            "match": result.to_dict(),
            "metrics": report(_gray(lr), _gray(matched)).to_dict(),
        }
        Path(args.report).write_text(json.dumps(doc) + "\n")
    print(f"{value:.4f}")
    return 0


def cmd_adapt(args) -> int:
    content = _load(args.content)
    style = _load(args.style)
    if content.shape[2] != style.shape[2]:
        raise UsageError("content and style channel counts differ")
    method = "adain" if args.adain else "wct" if args.wct else args.method
    fc, fs = image_to_features(content), image_to_features(style)
    out = adapt_reference(fs, fc, method=method, use_pr=args.pr)
    save_raster(features_to_image(out), args.out)
    if args.float_dump:
        write_float_dump(out, args.float_dump)
    target = feature_stats(fs).covariance
    err = np.linalg.norm(feature_stats(out).covariance - target) / max(np.linalg.norm(target), 1e-300)
    print(f"{err:.6e}")
    return 0


def cmd_metrics(args) -> int:
    a, b = _load(args.a), _load(args.b)
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape[2] == 3:
        if args.gray:
            a, b = to_grayscale(a), to_grayscale(b)
        elif args.luma or args.metric != "psnr":
            a, b = luma_y(a), luma_y(b)
    try:
        if args.metric == "psnr":
            value = psnr(a, b)
        elif args.metric == "ssim":
            value = ssim(a, b, global_window=args.global_window)
        else:
            value = ssim_s(a, b, global_window=args.global_window)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print("inf" if math.isinf(value) else f"{value:.4f}")
    return 0


def cmd_bench(args) -> int:
    rows = run_bench(args.config, args.out_dir, dump_images=args.dump_images, threads=args.threads)
    print(f"{len(rows)} rows written to {Path(args.out_dir) / 'bench.csv'}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="domatch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="match an input against a reference and rebuild it from reference patches")
    p.add_argument("--input", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--gray", action="store_true", help="match on channel-mean grayscale")
    p.add_argument("--patch", type=int, default=8)
    p.add_argument("--stride", type=int, default=8)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write MatchResult + MetricReport JSON here")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("adapt", help="adapt a content image toward a style image's statistics")
    p.add_argument("--content", required=True)
    p.add_argument("--style", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--method", choices=("wct", "adain"), default="wct")
    g.add_argument("--wct", action="store_true")
    g.add_argument("--adain", action="store_true")
    p.add_argument("--pr", action="store_true", help="phase replacement after adaptation")
    p.add_argument("--out", required=True)
    p.add_argument("--float-dump", help="also write unquantized planes (RMFP format)")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("metrics", help="PSNR / SSIM / SSIM-s between two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metric", choices=("psnr", "ssim", "ssim-s"), required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--luma", action="store_true", help="BT.601 Y plane (default for ssim on color)")
    g.add_argument("--gray", action="store_true", help="channel-mean plane")
    p.add_argument("--global", dest="global_window", action="store_true",
                   help="one statistic over the whole plane instead of sliding windows")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="run the synthetic domain-gap benchmark")
    p.add_argument("--config", required=True, help="config file, or a bundled name: default, sweep_a, sweep_b")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dump-images", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"domatch {args.command}: {exc}", file=sys.stderr)
        return 2
    except (RasterError, OSError) as exc:
        print(f"domatch {args.command}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"domatch {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
