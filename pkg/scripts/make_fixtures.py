"""Generate the two bundled 256x256 aerial-style test images.

Fields with crop-row texture, roads, roof clusters with shadows, water and
tree canopy, drawn procedurally from fixed seeds. Colors stay mid-range so
moderate hue/brightness perturbations rarely clip.

    python scripts/make_fixtures.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np
from scipy import ndimage

from domatch.image import save_raster

SIZE = 256

FIELD_COLORS = np.array([
    [0.42, 0.55, 0.30], [0.55, 0.50, 0.33], [0.62, 0.56, 0.38], [0.36, 0.48, 0.28],
    [0.58, 0.46, 0.34], [0.47, 0.58, 0.40], [0.66, 0.60, 0.45], [0.50, 0.44, 0.36],
])
ROOF_COLORS = np.array([
    [0.72, 0.40, 0.33], [0.62, 0.62, 0.64], [0.40, 0.46, 0.62], [0.75, 0.66, 0.52],
])


def _fields(rng, n_cells):
    yy, xx = np.mgrid[0:SIZE, 0:SIZE].astype(float)
    seeds = rng.uniform(0, SIZE, size=(n_cells, 2))
    d = (yy[None] - seeds[:, 0, None, None]) ** 2 + (xx[None] - seeds[:, 1, None, None]) ** 2
    label = np.argmin(d, axis=0)
    img = np.zeros((SIZE, SIZE, 3))
    for k in range(n_cells):
        mask = label == k
        base = FIELD_COLORS[rng.integers(len(FIELD_COLORS))] + rng.normal(0, 0.03, 3)
        ang = rng.uniform(0, np.pi)
        period = rng.uniform(4, 11)
        rows = np.sin(2 * np.pi * (xx * np.cos(ang) + yy * np.sin(ang)) / period)
        amp = rng.uniform(0.02, 0.07)
        img[mask] = base + amp * rows[mask][:, None]
    # field boundaries
    edge = ndimage.morphological_gradient(label, size=2) > 0
    img[edge] = img[edge] * 0.85
    return img


def _roads(rng, img, n):
    yy, xx = np.mgrid[0:SIZE, 0:SIZE].astype(float)
    for _ in range(n):
        p = rng.uniform(0, SIZE, 2)
        ang = rng.uniform(0, np.pi)
        dist = np.abs((yy - p[0]) * np.cos(ang) - (xx - p[1]) * np.sin(ang))
        width = rng.uniform(1.5, 3.0)
        tone = rng.uniform(0.55, 0.68)
        img[dist < width] = [tone, tone, tone * 0.97]


def _buildings(rng, img, n, center, spread):
    for _ in range(n):
        cy, cx = rng.normal(center, spread, 2).astype(int)
        h, w = rng.integers(5, 16, 2)
        y0, x0 = np.clip([cy, cx], 0, SIZE - 1)
        y1, x1 = min(SIZE, y0 + h), min(SIZE, x0 + w)
        # shadow first, offset down-right
        img[min(SIZE - 1, y0 + 2):min(SIZE, y1 + 2), min(SIZE - 1, x0 + 2):min(SIZE, x1 + 2)] *= 0.6
        roof = ROOF_COLORS[rng.integers(len(ROOF_COLORS))] + rng.normal(0, 0.03, 3)
        img[y0:y1, x0:x1] = roof
        # ridge line
        if y1 - y0 > 4:
            mid = (y0 + y1) // 2
            img[mid, x0:x1] = roof * 0.8


def _water(rng, img, center, radius):
    yy, xx = np.mgrid[0:SIZE, 0:SIZE].astype(float)
    r = np.hypot(yy - center[0], xx - center[1])
    wobble = 1 + 0.25 * np.sin(np.arctan2(yy - center[0], xx - center[1]) * 3 + rng.uniform(0, 6))
    mask = r < radius * wobble
    ripple = 0.02 * np.sin(yy / 3.0 + xx / 5.0)
    img[mask] = np.array([0.28, 0.38, 0.50]) + ripple[mask][:, None]


def _trees(rng, img, n):
    yy, xx = np.mgrid[0:SIZE, 0:SIZE].astype(float)
    for _ in range(n):
        c = rng.uniform(0, SIZE, 2)
        rad = rng.uniform(2, 5)
        mask = np.hypot(yy - c[0], xx - c[1]) < rad
        img[mask] = np.array([0.25, 0.40, 0.22]) + rng.normal(0, 0.03, 3)


def make(seed, n_cells, n_roads, n_build, water, n_trees, town):
    rng = np.random.default_rng(seed)
    img = _fields(rng, n_cells)
    if water is not None:
        _water(rng, img, *water)
    _roads(rng, img, n_roads)
    _buildings(rng, img, n_build, town, 35)
    _trees(rng, img, n_trees)
    img = ndimage.gaussian_filter(img, sigma=(0.6, 0.6, 0))
    img += rng.normal(0, 0.015, img.shape)
    return np.clip(img, 0.05, 0.95)


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    a = make(20240101, 22, 3, 60, ((190, 60), 40), 90, (100, 150))
    b = make(20240202, 30, 4, 110, None, 60, (128, 110))
    save_raster(a, out / "aerial_a.png")
    save_raster(b, out / "aerial_b.png")
    print(f"wrote {out / 'aerial_a.png'} and {out / 'aerial_b.png'}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src/domatch/data")
