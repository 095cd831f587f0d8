"""Image container helpers, color conversions, bicubic resampling and raster I/O.

Images are plain ``numpy`` arrays of shape ``(H, W, C)`` with ``C`` in ``{1, 3}``
and float64 samples in ``[0, 1]``.
"""
from __future__ import annotations

import struct
from pathlib import Path

import cv2
import numpy as np
from PIL import Image as PILImage

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_FLOAT_DUMP_MAGIC = b"RMFP"


class RasterError(ValueError):
    """Raised for unreadable or unsupported raster files."""


def as_image(arr) -> np.ndarray:
    """Validate and return ``arr`` as a float64 ``(H, W, C)`` image.

    2D input is promoted to a single-channel image.
    """
    img = np.asarray(arr, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W, 1|3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must have at least one pixel")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite samples")
    return img


def plane(image: np.ndarray) -> np.ndarray:
    """Return the single plane of a one-channel image as a 2D array."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 1:
        return img[:, :, 0]
    raise ValueError(f"expected a single-channel image, got shape {img.shape}")


def replicate3(image: np.ndarray) -> np.ndarray:
    return np.repeat(as_image(image)[:, :, :1], 3, axis=2)


def _require_rgb(image) -> np.ndarray:
    img = as_image(image)
    if img.shape[2] != 3:
        raise ValueError("operation requires a 3-channel image")
    return img


def to_grayscale(image) -> np.ndarray:
    """Unweighted mean of the three color channels.

    The channels are sorted per pixel and the mean is formed as
    ``lo + ((mid - lo) + (hi - lo)) / 3`` so the result is exactly invariant
    to channel order and exactly ``v`` when all three channels equal ``v``.
    """
    img = _require_rgb(image)
    s = np.sort(img, axis=2)
    lo = s[:, :, 0]
    out = lo + ((s[:, :, 1] - lo) + (s[:, :, 2] - lo)) / 3.0
    return out[:, :, None]


def luma_y(image) -> np.ndarray:
    """BT.601 full-range luma, ``0.299 R + 0.587 G + 0.114 B``.

    Written relative to G so that gray pixels map to themselves exactly.
    """
    img = _require_rgb(image)
    r, g, b = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    y = g + 0.299 * (r - g) + 0.114 * (b - g)
    return y[:, :, None]


# --------------------------------------------------------------------------
# Bicubic resampling
# --------------------------------------------------------------------------

def cubic_weight(t, a: float = -0.5):
    """Keys cubic convolution kernel; ``a = -0.5`` is Catmull-Rom."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    t2 = t * t
    t3 = t2 * t
    near = (a + 2.0) * t3 - (a + 3.0) * t2 + 1.0
    far = a * t3 - 5.0 * a * t2 + 8.0 * a * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _taps(n_in: int, n_out: int):
    """Tap indices (n_out, 4), weights (n_out, 4) and base index per output sample."""
    dst = np.arange(n_out, dtype=np.float64)
    src = (dst + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src)
    frac = src - base
    offsets = np.arange(-1, 3)
    idx = base[:, None].astype(np.int64) + offsets[None, :]
    weights = cubic_weight(frac[:, None] - offsets[None, :])
    idx = np.clip(idx, 0, n_in - 1)
    return idx, weights, idx[:, 1]


def _resample_axis0(arr: np.ndarray, n_out: int) -> np.ndarray:
    n_in = arr.shape[0]
    if n_in == n_out:
        return arr.copy()
    idx, w, base = _taps(n_in, n_out)
    ref = arr[base]
    out = ref.copy()
    # accumulate deviations from the base tap: constants are reproduced exactly
    for k in range(4):
        wk = w[:, k].reshape((-1,) + (1,) * (arr.ndim - 1))
        out = out + wk * (arr[idx[:, k]] - ref)
    return out


def resample(arr, out_height: int, out_width: int) -> np.ndarray:
    """Catmull-Rom resampling of the two leading axes, no clamping of values.

    Works for 2D planes and ``(H, W, C)`` stacks alike.
    """
    if out_height < 1 or out_width < 1:
        raise ValueError("output dimensions must be >= 1")
    a = np.asarray(arr, dtype=np.float64)
    a = _resample_axis0(a, out_height)
    a = np.swapaxes(_resample_axis0(np.swapaxes(a, 0, 1), out_width), 0, 1)
    return a


def resize_bicubic(image, out_width: int, out_height: int) -> np.ndarray:
    """Resize with the Catmull-Rom kernel (edge-clamped taps), clamped to [0, 1]."""
    img = as_image(image)
    if out_width < 1 or out_height < 1:
        raise ValueError("output dimensions must be >= 1")
    if img.shape[:2] == (out_height, out_width):
        return img.copy()
    return np.clip(resample(img, out_height, out_width), 0.0, 1.0)


# --------------------------------------------------------------------------
# Raster I/O
# --------------------------------------------------------------------------

def _png_header(path: Path) -> tuple[int, int]:
    with open(path, "rb") as fh:
        head = fh.read(33)
    if len(head) < 33 or head[:8] != _PNG_SIGNATURE or head[12:16] != b"IHDR":
        raise RasterError(f"{path}: not a PNG file")
    bit_depth, color_type = head[24], head[25]
    return bit_depth, color_type


def load_raster(path) -> np.ndarray:
    """Read an 8- or 16-bit grayscale/RGB(A) PNG into a float image in [0, 1].

    Alpha is discarded. Palette images are expanded to RGB.
    """
    path = Path(path)
    if not path.is_file():
        raise RasterError(f"{path}: no such file")
    bit_depth, color_type = _png_header(path)
    if bit_depth not in (8, 16):
        raise RasterError(f"{path}: unsupported bit depth {bit_depth}")
    if color_type not in (0, 2, 3, 4, 6):
        raise RasterError(f"{path}: unsupported color type {color_type}")

    if bit_depth == 16 and color_type in (2, 4, 6):
        # Pillow truncates 16-bit color to 8 bits
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise RasterError(f"{path}: could not decode")
        if color_type == 4:
            data = raw[:, :, :1] if raw.ndim == 3 else raw[:, :, None]
        else:
            data = raw[:, :, 2::-1]
    else:
        try:
            with PILImage.open(path) as im:
                im.load()
                if im.mode == "P":
                    im = im.convert("RGB")
                if im.mode in ("RGBA", "LA"):
                    im = im.convert(im.mode[:-1])
                data = np.array(im)
        except OSError as exc:
            raise RasterError(f"{path}: could not decode ({exc})") from exc
        if data.ndim == 2:
            data = data[:, :, None]
    max_code = 65535.0 if bit_depth == 16 else 255.0
    return as_image(data.astype(np.float64) / max_code)


def quantize8(image) -> np.ndarray:
    """Round-half-up quantization of clamped samples to 8-bit codes."""
    img = np.clip(as_image(image), 0.0, 1.0)
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)


def save_raster(image, path) -> None:
    """Write ``image`` as an 8-bit PNG (gray or RGB)."""
    codes = quantize8(image)
    mode = "L" if codes.shape[2] == 1 else "RGB"
    arr = codes[:, :, 0] if mode == "L" else codes
    try:
        PILImage.fromarray(arr, mode=mode).save(Path(path), format="PNG")
    except OSError as exc:
        raise RasterError(f"{path}: could not write ({exc})") from exc


def write_float_dump(planes, path) -> None:
    """Write ``(C, H, W)`` float64 planes: ``RMFP`` magic, u32 C, H, W, then LE doubles."""
    arr = np.asarray(planes, dtype="<f8")
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError("float dump expects (C, H, W) planes")
    c, h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(_FLOAT_DUMP_MAGIC + struct.pack("<III", c, h, w))
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_float_dump(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != _FLOAT_DUMP_MAGIC:
            raise RasterError(f"{path}: not a float dump")
        c, h, w = struct.unpack("<III", head[4:])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != c * h * w:
        raise RasterError(f"{path}: truncated float dump")
    return data.reshape(c, h, w).astype(np.float64)
