"""Dense patch descriptors standing in for a learned matching encoder.

A feature map is a ``(C, H, W)`` float array. Descriptors are raw patches
flattened channel-major, mean-centered and L2-normalized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import as_image


@dataclass(frozen=True)
class PatchGeometry:
    patch_size: int
    stride: int
    source_w: int
    source_h: int

    def __post_init__(self):
        if self.patch_size < 1 or self.stride < 1:
            raise ValueError("patch_size and stride must be >= 1")
        if self.patch_size > min(self.source_w, self.source_h):
            raise ValueError(
                f"patch_size {self.patch_size} exceeds source {self.source_w}x{self.source_h}"
            )

    @classmethod
    def for_shape(cls, height: int, width: int, patch_size: int, stride: int) -> "PatchGeometry":
        return cls(patch_size=patch_size, stride=stride, source_w=width, source_h=height)

    @property
    def grid_w(self) -> int:
        return (self.source_w - self.patch_size) // self.stride + 1

    @property
    def grid_h(self) -> int:
        return (self.source_h - self.patch_size) // self.stride + 1

    @property
    def count(self) -> int:
        return self.grid_w * self.grid_h

    def origin(self, index: int) -> tuple[int, int]:
        """(row, col) of the top-left pixel of patch ``index``."""
        gy, gx = divmod(index, self.grid_w)
        return gy * self.stride, gx * self.stride

    def to_dict(self) -> dict:
        return {
            "patch_size": self.patch_size,
            "stride": self.stride,
            "grid_w": self.grid_w,
            "grid_h": self.grid_h,
            "source_w": self.source_w,
            "source_h": self.source_h,
        }


@dataclass(frozen=True)
class DescriptorSet:
    vectors: np.ndarray  # (count, dim), unit rows or exact zeros
    norms: np.ndarray    # L2 norm of each centered patch before normalization
    geometry: PatchGeometry | None = None

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def image_to_features(image) -> np.ndarray:
    """Lift an ``(H, W, C)`` image to ``(C, H, W)`` feature planes."""
    return np.ascontiguousarray(np.transpose(as_image(image), (2, 0, 1)))


def features_to_image(f, clip: bool = True) -> np.ndarray:
    img = np.transpose(np.asarray(f, dtype=np.float64), (1, 2, 0))
    if clip:
        img = np.clip(img, 0.0, 1.0)
    return np.ascontiguousarray(img)


def extract_patches(f, geom: PatchGeometry) -> DescriptorSet:
    fm = np.asarray(f, dtype=np.float64)
    if fm.ndim != 3 or fm.shape[0] < 1:
        raise ValueError(f"expected (C, H, W) feature map, got shape {fm.shape}")
    c, h, w = fm.shape
    if (h, w) != (geom.source_h, geom.source_w):
        raise ValueError(
            f"geometry is for {geom.source_w}x{geom.source_h}, feature map is {w}x{h}"
        )
    p, s = geom.patch_size, geom.stride
    win = sliding_window_view(fm, (p, p), axis=(1, 2))[:, ::s, ::s]
    # (C, gh, gw, p, p) -> (gh, gw, C, p, p): channel-major, then row-major
    patches = np.transpose(win, (1, 2, 0, 3, 4)).reshape(geom.count, c * p * p)

    constant = np.ptp(patches, axis=1) == 0.0
    centered = patches - patches.mean(axis=1, keepdims=True)
    centered[constant] = 0.0
    norms = np.sqrt(np.sum(centered * centered, axis=1))
    vectors = np.zeros_like(centered)
    ok = norms > 0.0
    vectors[ok] = centered[ok] / norms[ok, None]
    return DescriptorSet(vectors=vectors, norms=norms, geometry=geom)
