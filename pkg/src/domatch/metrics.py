"""PSNR, SSIM and the structure-only SSIM-s.

All metrics use a data range of ``L = 1`` on float planes. SSIM and SSIM-s
share one windowing scheme: an 11x11 Gaussian window (sigma 1.5) evaluated
at every fully-contained position, averaged over positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import as_image, luma_y, plane

DATA_RANGE = 1.0
K1, K2 = 0.01, 0.03
C1 = (K1 * DATA_RANGE) ** 2
C2 = (K2 * DATA_RANGE) ** 2
C3 = C2 / 2.0
WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5

_ROW_BLOCK = 64


def gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def window_settings(global_window: bool = False) -> dict:
    if global_window:
        return {"type": "global", "data_range": DATA_RANGE}
    return {
        "type": "gaussian",
        "size": WINDOW_SIZE,
        "sigma": WINDOW_SIGMA,
        "region": "valid",
        "data_range": DATA_RANGE,
    }


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x, y = plane(a), plane(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def window_moments(a, b, global_window: bool = False):
    """Weighted local means, variances and covariance, one value per window.

    Second moments are taken about the local mean (two-pass), so variances are
    never negative and ``var(x) == cov(x, x)`` bit for bit.
    """
    x, y = _pair(a, b)
    if global_window:
        mx, my = x.mean(), y.mean()
        dx, dy = x - mx, y - my
        return (
            np.array([mx]), np.array([my]),
            np.array([np.mean(dx * dx)]), np.array([np.mean(dy * dy)]),
            np.array([np.mean(dx * dy)]),
        )
    if min(x.shape) < WINDOW_SIZE:
        raise ValueError(f"image {x.shape} is smaller than the {WINDOW_SIZE}x{WINDOW_SIZE} window")
    w = gaussian_window()
    wx = sliding_window_view(x, w.shape)
    wy = sliding_window_view(y, w.shape)
    oh, ow = wx.shape[:2]
    out = [np.empty((oh, ow)) for _ in range(5)]
    for r0 in range(0, oh, _ROW_BLOCK):
        bx = wx[r0:r0 + _ROW_BLOCK]
        by = wy[r0:r0 + _ROW_BLOCK]
        mx = np.sum(bx * w, axis=(2, 3))
        my = np.sum(by * w, axis=(2, 3))
        dx = bx - mx[:, :, None, None]
        dy = by - my[:, :, None, None]
        sl = slice(r0, r0 + bx.shape[0])
        out[0][sl] = mx
        out[1][sl] = my
        out[2][sl] = np.sum(dx * dx * w, axis=(2, 3))
        out[3][sl] = np.sum(dy * dy * w, axis=(2, 3))
        out[4][sl] = np.sum(dx * dy * w, axis=(2, 3))
    return tuple(out)


def ssim_components(a, b, global_window: bool = False):
    """Luminance, contrast and structure maps ``(l, c, s)`` per window."""
    mx, my, vx, vy, cxy = window_moments(a, b, global_window)
    sxy = np.sqrt(vx * vy)
    lum = (2.0 * mx * my + C1) / (mx * mx + my * my + C1)
    con = (2.0 * sxy + C2) / (vx + vy + C2)
    struct = (cxy + C3) / (sxy + C3)
    return lum, con, struct


def ssim_map(a, b, global_window: bool = False) -> np.ndarray:
    mx, my, vx, vy, cxy = window_moments(a, b, global_window)
    lum = (2.0 * mx * my + C1) / (mx * mx + my * my + C1)
    # c * s collapses to this form because C3 = C2 / 2
    cs = (2.0 * cxy + C2) / (vx + vy + C2)
    return lum * cs


def ssim(a, b, global_window: bool = False) -> float:
    """Mean SSIM between two single-channel images."""
    return float(np.mean(ssim_map(a, b, global_window)))


def ssim_s(a, b, global_window: bool = False) -> float:
    """Mean structure term ``(sigma_xy + C3) / (sigma_x sigma_y + C3)``."""
    _, _, vx, vy, cxy = window_moments(a, b, global_window)
    s = (cxy + C3) / (np.sqrt(vx * vy) + C3)
    return float(np.mean(s))


def psnr(a, b, on_luma: bool = False) -> float:
    """PSNR in dB with L = 1; identical inputs give ``inf``."""
    x, y = as_image(a), as_image(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if on_luma and x.shape[2] == 3:
        x, y = luma_y(x), luma_y(y)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(DATA_RANGE ** 2 / mse)


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    ssim_s: float
    window: dict = field(default_factory=window_settings)
    planes: str = "gray"

    def to_dict(self) -> dict:
        return {
            "psnr_db": "inf" if math.isinf(self.psnr_db) else self.psnr_db,
            "ssim": self.ssim,
            "ssim_s": self.ssim_s,
            "planes": self.planes,
            "window": dict(self.window),
        }


def report(a, b, global_window: bool = False, planes: str = "gray") -> MetricReport:
    """Score two single-channel planes with all three metrics."""
    return MetricReport(
        psnr_db=psnr(plane(a), plane(b)),
        ssim=ssim(a, b, global_window),
        ssim_s=ssim_s(a, b, global_window),
        window=window_settings(global_window),
        planes=planes,
    )
