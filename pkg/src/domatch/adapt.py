"""Feature-distribution alignment: WCT, AdaIN and Fourier phase replacement.

Feature maps are ``(C, H, W)`` float arrays. In :func:`adapt_reference` the
reference map plays the content role (its structure is kept) and the LR map
the style role (its statistics are the target).
"""
from __future__ import annotations

import warnings

import numpy as np

from .image import resample
from .numerics import CovStats, dft2, feature_stats, idft2

EIG_FLOOR = 1e-5
ADAIN_MIN_STD = 1e-8
PHASE_ZERO_AMPLITUDE = 1e-12
METHODS = ("wct", "adain")


class DegenerateCovarianceWarning(RuntimeWarning):
    """Whitening was asked to normalize a map with no variance."""


def _as_map(f) -> np.ndarray:
    fm = np.asarray(f, dtype=np.float64)
    if fm.ndim != 3 or fm.shape[0] < 1:
        raise ValueError(f"expected (C, H, W) feature map, got shape {fm.shape}")
    return fm


def _is_degenerate(stats: CovStats) -> bool:
    # a constant map leaves ~1e-17 residue after centering, i.e. ~1e-34 variance
    scale = max(1.0, float(np.max(np.abs(stats.mean), initial=0.0))) ** 2
    return float(stats.eig.values[0]) <= 1e-24 * scale


def whiten(f, stats: CovStats, eps: float = EIG_FLOOR) -> np.ndarray:
    """``E D^-1/2 E^T (f - m)`` with eigenvalues floored at ``eps * D_max``."""
    fm = _as_map(f)
    c = fm.shape[0]
    if stats.channels != c:
        raise ValueError(f"stats have {stats.channels} channels, map has {c}")
    x = fm.reshape(c, -1) - stats.mean[:, None]
    if _is_degenerate(stats):
        warnings.warn("covariance is zero; returning the centered map", DegenerateCovarianceWarning)
        return np.zeros_like(fm) if np.ptp(fm) == 0.0 else x.reshape(fm.shape)
    d, e = stats.eig
    d = np.maximum(d, eps * d[0])
    w = (e / np.sqrt(d)) @ e.T
    return (w @ x).reshape(fm.shape)


def color(f_white, style_stats: CovStats) -> np.ndarray:
    """``E_s D_s^1/2 E_s^T f + m_s``."""
    fm = _as_map(f_white)
    c = fm.shape[0]
    if style_stats.channels != c:
        raise ValueError(f"stats have {style_stats.channels} channels, map has {c}")
    m = style_stats.mean[:, None]
    if _is_degenerate(style_stats):
        return np.broadcast_to(m, (c, fm.shape[1] * fm.shape[2])).reshape(fm.shape).copy()
    d, e = style_stats.eig
    k = (e * np.sqrt(np.maximum(d, 0.0))) @ e.T
    return (k @ fm.reshape(c, -1) + m).reshape(fm.shape)


def wct(content, style) -> np.ndarray:
    """Whiten ``content`` with its own statistics, then color with ``style``'s."""
    cm, sm = _as_map(content), _as_map(style)
    if cm.shape[0] != sm.shape[0]:
        raise ValueError("content and style channel counts differ")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateCovarianceWarning)
        white = whiten(cm, feature_stats(cm))
    return color(white, feature_stats(sm))


def adain(content, style) -> np.ndarray:
    """Per-channel mean/std transfer (1/N standard deviations)."""
    cm, sm = _as_map(content), _as_map(style)
    if cm.shape[0] != sm.shape[0]:
        raise ValueError("content and style channel counts differ")
    c = cm.shape[0]
    x = cm.reshape(c, -1)
    y = sm.reshape(c, -1)
    mu_c, sd_c = x.mean(axis=1), x.std(axis=1)
    mu_s, sd_s = y.mean(axis=1), y.std(axis=1)
    out = np.empty_like(x)
    for ch in range(c):
        if sd_c[ch] < ADAIN_MIN_STD:
            out[ch] = mu_s[ch]
        else:
            out[ch] = sd_s[ch] * (x[ch] - mu_c[ch]) / sd_c[ch] + mu_s[ch]
    return out.reshape(cm.shape)


def phase_replace(stylized, content, with_residual: bool = False):
    """Combine the amplitude spectrum of ``stylized`` with the phase of ``content``.

    Works channel by channel. Bins where the content spectrum has magnitude
    below 1e-12 get phase 0.
    """
    sm, cm = _as_map(stylized), _as_map(content)
    if sm.shape != cm.shape:
        raise ValueError(f"shape mismatch: {sm.shape} vs {cm.shape}")
    out = np.empty_like(sm)
    residual = 0.0
    for ch in range(sm.shape[0]):
        amp = np.abs(dft2(sm[ch]))
        fc = dft2(cm[ch])
        phase = np.where(np.abs(fc) < PHASE_ZERO_AMPLITUDE, 0.0, np.angle(fc))
        out[ch], res = idft2(amp * np.exp(1j * phase), with_residual=True)
        residual = max(residual, res)
    if with_residual:
        return out, residual
    return out


def adapt_reference(lr_features, ref_features, method: str = "wct", use_pr: bool = True) -> np.ndarray:
    """Move the reference features toward the LR feature distribution.

    The reference is the content map and the LR map the style. With ``use_pr``
    the result keeps its amplitude spectrum but takes the phase of the original
    reference, and the LR map is first resampled to the reference size.
    """
    if method not in METHODS:
        raise ValueError(f"unknown adaptation method {method!r}")
    lr, ref = _as_map(lr_features), _as_map(ref_features)
    if lr.shape[0] != ref.shape[0]:
        raise ValueError("LR and reference channel counts differ")
    if use_pr and lr.shape[1:] != ref.shape[1:]:
        h, w = ref.shape[1:]
        lr = np.stack([resample(p, h, w) for p in lr])
    transform = wct if method == "wct" else adain
    out = transform(ref, lr)
    if use_pr:
        out = phase_replace(out, ref)
    return out
