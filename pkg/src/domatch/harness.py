"""Synthetic domain-gap benchmark: perturbations, ablation arms, reports.

A bench run takes one source image, crops it, builds an LR surrogate by
bicubic down/up-sampling, perturbs a copy of the crop into a reference with
each configured gap, and runs every configured arm on every (LR, reference)
pair. Rows come out arm-major, gap-minor.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .adapt import adapt_reference
from .features import PatchGeometry, features_to_image, image_to_features
from .image import as_image, load_raster, resize_bicubic, save_raster, to_grayscale, write_float_dump
from .matching import MatchResult, color_correspond, gray_correspond, reconstruct_matched
from .metrics import MetricReport, report, window_settings

# 3-px patches span under one LR pixel at x4; 7 covers about two
BENCH_PATCH = 7
BENCH_STRIDE = 1

CSV_COLUMNS = [
    "arm_id", "gray", "adapt", "pr", "brightness", "contrast",
    "gamma", "hue", "ssim", "ssim_s", "runtime_ms",
]
_ID_RE = re.compile(r"^[A-Za-z0-9_.+\-]+$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class GapSpec:
    brightness_delta: float = 0.0
    contrast_gain: float = 1.0
    gamma: float = 1.0
    hue_degrees: float = 0.0

    def __post_init__(self):
        vals = (self.brightness_delta, self.contrast_gain, self.gamma, self.hue_degrees)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("gap parameters must be finite")
        if not -1.0 <= self.brightness_delta <= 1.0:
            raise ValueError("brightness_delta must lie in [-1, 1]")
        if self.contrast_gain <= 0 or self.gamma <= 0:
            raise ValueError("contrast_gain and gamma must be positive")


IDENTITY_GAP = GapSpec()

# brightness +-0.1/+-0.2, contrast 0.7/1.3, hue 30/60 degrees
DEFAULT_SWEEP = {
    "b-0.2": GapSpec(brightness_delta=-0.2),
    "b-0.1": GapSpec(brightness_delta=-0.1),
    "b+0.1": GapSpec(brightness_delta=0.1),
    "b+0.2": GapSpec(brightness_delta=0.2),
    "c0.7": GapSpec(contrast_gain=0.7),
    "c1.3": GapSpec(contrast_gain=1.3),
    "h30": GapSpec(hue_degrees=30.0),
    "h60": GapSpec(hue_degrees=60.0),
}


def hue_rotation_matrix(degrees: float) -> np.ndarray:
    """Rotation about the RGB gray axis (1, 1, 1), right-handed."""
    th = math.radians(degrees)
    k = np.full(3, 1.0 / math.sqrt(3.0))
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return math.cos(th) * np.eye(3) + math.sin(th) * kx + (1.0 - math.cos(th)) * np.outer(k, k)


def apply_gap(image, gap: GapSpec) -> np.ndarray:
    """gamma -> contrast about the global mean -> brightness -> hue -> clamp."""
    img = as_image(image)
    if img.shape[2] != 3:
        raise ValueError("apply_gap needs a 3-channel image")
    out = img.copy()
    if gap.gamma != 1.0:
        out = out ** gap.gamma
    if gap.contrast_gain != 1.0:
        m = out.mean()
        out = m + gap.contrast_gain * (out - m)
    if gap.brightness_delta != 0.0:
        out = out + gap.brightness_delta
    if gap.hue_degrees != 0.0:
        out = out @ hue_rotation_matrix(gap.hue_degrees).T
    return np.clip(out, 0.0, 1.0)


def make_lr(hr, scale: int) -> np.ndarray:
    """Bicubic downscale by ``scale`` (floor) and back up to the original size."""
    img = as_image(hr)
    if scale < 1:
        raise ValueError("scale must be >= 1")
    h, w = img.shape[:2]
    lh, lw = h // scale, w // scale
    if lh < 1 or lw < 1:
        raise ValueError(f"scale {scale} leaves no pixels of a {w}x{h} image")
    if scale == 1:
        return img.copy()
    return resize_bicubic(resize_bicubic(img, lw, lh), w, h)


@dataclass(frozen=True)
class ArmConfig:
    arm_id: str
    gray_matching: bool = False
    adapt_method: str = "none"
    phase_replace: bool = False
    patch_size: int = BENCH_PATCH
    stride: int = BENCH_STRIDE

    def __post_init__(self):
        if self.adapt_method not in ("none", "wct", "adain"):
            raise ValueError(f"unknown adapt method {self.adapt_method!r}")
        if self.phase_replace and self.adapt_method == "none":
            raise ValueError("phase replacement needs an adaptation method")

    def geometry(self, height: int, width: int) -> PatchGeometry:
        return PatchGeometry.for_shape(height, width, self.patch_size, self.stride)


DEFAULT_ARMS = (
    ArmConfig("baseline"),
    ArmConfig("gray", gray_matching=True),
    ArmConfig("wct_pr", adapt_method="wct", phase_replace=True),
    ArmConfig("gray_wct_pr", gray_matching=True, adapt_method="wct", phase_replace=True),
)


@dataclass
class ArmOutput:
    matched: np.ndarray
    report: MetricReport
    match: MatchResult
    transfer_ref: np.ndarray


def run_arm(lr, ref, arm: ArmConfig) -> ArmOutput:
    """Adapt (transfer side), match, reconstruct, score against gray LR."""
    lr_img, ref_img = as_image(lr), as_image(ref)
    transfer = ref_img
    if arm.adapt_method != "none":
        adapted = adapt_reference(
            image_to_features(lr_img), image_to_features(ref_img),
            method=arm.adapt_method, use_pr=arm.phase_replace,
        )
        transfer = features_to_image(adapted)

    gq = arm.geometry(*lr_img.shape[:2])
    gr = arm.geometry(*ref_img.shape[:2])
    matcher = gray_correspond if arm.gray_matching else color_correspond
    result = matcher(lr_img, ref_img, gq, gr)
    matched = reconstruct_matched(result, transfer, gr)
    rep = report(_gray(lr_img), _gray(matched))
    return ArmOutput(matched=matched, report=rep, match=result, transfer_ref=transfer)


def _gray(img: np.ndarray) -> np.ndarray:
    return to_grayscale(img) if img.shape[2] == 3 else img


# --------------------------------------------------------------------------
# Config
# --------------------------------------------------------------------------

@dataclass
class BenchConfig:
    image: Path
    image_label: str
    crop: int | None = 96
    crop_origin: tuple[int, int] | None = None  # (x, y); centered when None
    scale: int = 4
    patch_size: int = BENCH_PATCH
    stride: int = BENCH_STRIDE
    record_runtime: bool = False
    arms: list[ArmConfig] = field(default_factory=list)
    gaps: dict[str, GapSpec] = field(default_factory=dict)


_BOOL = {"on": True, "off": False, "true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}
_GAP_KEYS = {"brightness": "brightness_delta", "contrast": "contrast_gain",
             "gamma": "gamma", "hue": "hue_degrees"}


def _parse_bool(text: str, line: int, source: str, key: str) -> bool:
    try:
        return _BOOL[text.lower()]
    except KeyError:
        raise ConfigError(f"{key}: expected on/off, got {text!r}", line, source) from None


def _parse_int(text: str, line: int, source: str, key: str, minimum: int = 1) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}", line, source) from None
    if v < minimum:
        raise ConfigError(f"{key} must be >= {minimum}", line, source)
    return v


def _options(text: str, line: int, source: str) -> dict[str, str]:
    opts = {}
    for tok in text.split():
        if ":" not in tok:
            raise ConfigError(f"expected key:value, got {tok!r}", line, source)
        k, v = tok.split(":", 1)
        if k in opts:
            raise ConfigError(f"duplicate option {k!r}", line, source)
        opts[k] = v
    return opts


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> BenchConfig:
    """Parse the bench config grammar.

    ``#`` starts a comment; blank lines are ignored; ``[io]``, ``[arms]`` and
    ``[gaps]`` open sections; every other line is ``key = value``.

    * ``[io]``: ``image`` (path relative to the config file, or a bundled
      fixture name), ``crop`` (square size, or ``none``), ``crop_origin = x,y``,
      ``scale``, ``patch``, ``stride``, ``record_runtime``.
    * ``[arms]``: ``<arm_id> = gray:on|off adapt:none|wct|adain pr:on|off``.
    * ``[gaps]``: ``<gap_id> = brightness:<d> contrast:<g> gamma:<e> hue:<deg>``,
      omitted keys take their identity values.
    """
    base_dir = base_dir or Path(".")
    section = None
    io_vals: dict[str, tuple[str, int]] = {}
    arm_lines: list[tuple[str, str, int]] = []
    gap_lines: list[tuple[str, str, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno, source)
            section = line[1:-1].strip().lower()
            if section not in ("io", "arms", "gaps"):
                raise ConfigError(f"unknown section [{section}]", lineno, source)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno, source)
        if section is None:
            raise ConfigError("entry outside of any section", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno, source)
        if section == "io":
            if key in io_vals:
                raise ConfigError(f"duplicate key {key!r}", lineno, source)
            io_vals[key] = (value, lineno)
        else:
            if not _ID_RE.match(key):
                raise ConfigError(f"invalid id {key!r}", lineno, source)
            (arm_lines if section == "arms" else gap_lines).append((key, value, lineno))

    known = {"image", "crop", "crop_origin", "scale", "patch", "stride", "record_runtime"}
    for key, (_, lineno) in io_vals.items():
        if key not in known:
            raise ConfigError(f"unknown [io] key {key!r}", lineno, source)
    if "image" not in io_vals:
        raise ConfigError("[io] image is required", None, source)

    img_text, _ = io_vals["image"]
    cfg = BenchConfig(image=resolve_image(img_text, base_dir), image_label=img_text)
    if "crop" in io_vals:
        v, ln = io_vals["crop"]
        cfg.crop = None if v.lower() == "none" else _parse_int(v, ln, source, "crop")
    if "crop_origin" in io_vals:
        v, ln = io_vals["crop_origin"]
        parts = [p.strip() for p in v.split(",")]
        if len(parts) != 2:
            raise ConfigError("crop_origin must be 'x,y'", ln, source)
        cfg.crop_origin = (_parse_int(parts[0], ln, source, "crop_origin", 0),
                           _parse_int(parts[1], ln, source, "crop_origin", 0))
    for key, attr in (("scale", "scale"), ("patch", "patch_size"), ("stride", "stride")):
        if key in io_vals:
            v, ln = io_vals[key]
            setattr(cfg, attr, _parse_int(v, ln, source, key))
    if "record_runtime" in io_vals:
        v, ln = io_vals["record_runtime"]
        cfg.record_runtime = _parse_bool(v, ln, source, "record_runtime")

    seen = set()
    for arm_id, value, ln in arm_lines:
        if arm_id in seen:
            raise ConfigError(f"duplicate arm {arm_id!r}", ln, source)
        seen.add(arm_id)
        opts = _options(value, ln, source)
        unknown = set(opts) - {"gray", "adapt", "pr"}
        if unknown:
            raise ConfigError(f"unknown arm option(s) {sorted(unknown)}", ln, source)
        try:
            cfg.arms.append(ArmConfig(
                arm_id,
                gray_matching=_parse_bool(opts.get("gray", "off"), ln, source, "gray"),
                adapt_method=opts.get("adapt", "none").lower(),
                phase_replace=_parse_bool(opts.get("pr", "off"), ln, source, "pr"),
                patch_size=cfg.patch_size,
                stride=cfg.stride,
            ))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), ln, source) from None

    for gap_id, value, ln in gap_lines:
        if gap_id in cfg.gaps:
            raise ConfigError(f"duplicate gap {gap_id!r}", ln, source)
        opts = _options(value, ln, source)
        unknown = set(opts) - set(_GAP_KEYS)
        if unknown:
            raise ConfigError(f"unknown gap option(s) {sorted(unknown)}", ln, source)
        try:
            kwargs = {_GAP_KEYS[k]: float(v) for k, v in opts.items()}
            cfg.gaps[gap_id] = GapSpec(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc), ln, source) from None

    if not cfg.arms:
        raise ConfigError("no arms configured", None, source)
    if not cfg.gaps:
        raise ConfigError("no gaps configured", None, source)
    return cfg


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("domatch") / "data" / name))


def resolve_image(text: str, base_dir: Path) -> Path:
    p = Path(text)
    if not p.is_absolute():
        cand = base_dir / p
        if cand.exists() or not bundled_path(text).exists():
            p = cand
        else:
            p = bundled_path(text)
    return p


def load_config(path) -> BenchConfig:
    path = Path(path)
    if not path.is_file():
        bundled = bundled_path(f"{path.name}.cfg" if path.suffix == "" else path.name)
        if str(path) == path.name and bundled.is_file():
            path = bundled
        else:
            raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text(), source=str(path), base_dir=path.parent)


# --------------------------------------------------------------------------
# Bench
# --------------------------------------------------------------------------

@dataclass
class BenchRow:
    arm: ArmConfig
    gap_id: str
    gap: GapSpec
    ssim: float
    ssim_s: float
    runtime_ms: float

    def csv_fields(self) -> list[str]:
        return [
            self.arm.arm_id,
            "1" if self.arm.gray_matching else "0",
            self.arm.adapt_method,
            "1" if self.arm.phase_replace else "0",
            repr(self.gap.brightness_delta),
            repr(self.gap.contrast_gain),
            repr(self.gap.gamma),
            repr(self.gap.hue_degrees),
            repr(self.ssim),
            repr(self.ssim_s),
            repr(self.runtime_ms),
        ]

    def to_dict(self) -> dict:
        return {
            "arm": asdict(self.arm),
            "gap_id": self.gap_id,
            "gap": asdict(self.gap),
            "ssim": self.ssim,
            "ssim_s": self.ssim_s,
            "runtime_ms": self.runtime_ms,
        }


def prepare_inputs(cfg: BenchConfig) -> np.ndarray:
    """Load and crop the bench source image."""
    img = load_raster(cfg.image)
    if img.shape[2] != 3:
        raise ValueError(f"{cfg.image}: bench needs an RGB image")
    if cfg.crop is None:
        return img
    h, w = img.shape[:2]
    if cfg.crop > min(h, w):
        raise ValueError(f"crop {cfg.crop} exceeds image size {w}x{h}")
    if cfg.crop_origin is None:
        x0, y0 = (w - cfg.crop) // 2, (h - cfg.crop) // 2
    else:
        x0, y0 = cfg.crop_origin
        if x0 + cfg.crop > w or y0 + cfg.crop > h:
            raise ValueError("crop window leaves the image")
    return img[y0:y0 + cfg.crop, x0:x0 + cfg.crop].copy()


def _run_one(job):
    arm, gap_id, gap, lr, src, record_runtime = job
    ref = apply_gap(src, gap)
    t0 = time.perf_counter()
    out = run_arm(lr, ref, arm)
    elapsed = (time.perf_counter() - t0) * 1000.0 if record_runtime else 0.0
    row = BenchRow(arm, gap_id, gap, out.report.ssim, out.report.ssim_s, elapsed)
    return row, out


def environment_stamp(cfg: BenchConfig) -> dict:
    return {
        "version": __version__,
        "image": cfg.image_label,
        "crop": cfg.crop,
        "crop_origin": list(cfg.crop_origin) if cfg.crop_origin else None,
        "scale": cfg.scale,
        "geometry": {"patch_size": cfg.patch_size, "stride": cfg.stride},
        "window": window_settings(),
        "metric_planes": "gray",
        "row_order": "arm-major, gap-minor",
    }


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def run_bench(config, out_dir, dump_images: bool = False, threads: int = 1) -> list[BenchRow]:
    """Run every arm on every gap and write ``bench.csv`` and ``bench.json``.

    ``config`` is a path or an already-parsed :class:`BenchConfig`. Output
    bytes do not depend on ``threads``.
    """
    cfg = config if isinstance(config, BenchConfig) else load_config(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    src = prepare_inputs(cfg)
    lr = make_lr(src, cfg.scale)
    jobs = [
        (arm, gap_id, gap, lr, src, cfg.record_runtime)
        for arm in cfg.arms
        for gap_id, gap in cfg.gaps.items()
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    rows = [r for r, _ in results]

    (out / "bench.csv").write_text(rows_to_csv(rows), newline="")
    doc = {"environment": environment_stamp(cfg), "rows": [r.to_dict() for r in rows]}
    (out / "bench.json").write_text(json.dumps(doc, indent=2) + "\n")

    if dump_images:
        img_dir = out / "images"
        img_dir.mkdir(exist_ok=True)
        save_raster(lr, img_dir / "lr.png")
        write_float_dump(image_to_features(lr), img_dir / "lr.rmfp")
        for row, res in results:
            stem = f"{row.arm.arm_id}__{row.gap_id}"
            save_raster(res.matched, img_dir / f"{stem}.png")
            write_float_dump(image_to_features(res.matched), img_dir / f"{stem}.rmfp")
    return rows
