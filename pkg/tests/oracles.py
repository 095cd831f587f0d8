"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here imports from ``domatch``.
"""
import cmath
import math

import numpy as np


def naive_dft2(x):
    h, w = x.shape
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            s = 0j
            for a in range(h):
                for b in range(w):
                    s += x[a, b] * cmath.exp(-2j * math.pi * (u * a / h + v * b / w))
            out[u, v] = s
    return out


def seq_dot(q, r):
    s = 0.0
    for k in range(len(q)):
        s += float(q[k]) * float(r[k])
    return s


def brute_force_match(q, r):
    """Exhaustive argmax over the sequential dot, smallest index on ties."""
    idx, score = [], []
    for i in range(q.shape[0]):
        best_j, best = 0, None
        for j in range(r.shape[0]):
            s = seq_dot(q[i], r[j])
            if best is None or s > best:
                best_j, best = j, s
        idx.append(best_j)
        score.append(best)
    return np.array(idx), np.array(score)


def keys_kernel(t, a=-0.5):
    t = abs(t)
    if t <= 1:
        return (a + 2) * t ** 3 - (a + 3) * t ** 2 + 1
    if t < 2:
        return a * t ** 3 - 5 * a * t ** 2 + 8 * a * t - 4 * a
    return 0.0


def scalar_bicubic(plane, oh, ow):
    """Direct 4x4 Catmull-Rom convolution with clamped taps, no output clamp."""
    h, w = plane.shape
    out = np.zeros((oh, ow))
    for i in range(oh):
        sy = (i + 0.5) * h / oh - 0.5
        for j in range(ow):
            sx = (j + 0.5) * w / ow - 0.5
            fy, fx = math.floor(sy), math.floor(sx)
            acc = 0.0
            for m in range(fy - 1, fy + 3):
                for n in range(fx - 1, fx + 3):
                    wgt = keys_kernel(sy - m) * keys_kernel(sx - n)
                    acc += wgt * plane[min(max(m, 0), h - 1), min(max(n, 0), w - 1)]
            out[i, j] = acc
    return out


def gaussian_window(size=11, sigma=1.5):
    c = (size - 1) / 2
    g = [[math.exp(-((i - c) ** 2 + (j - c) ** 2) / (2 * sigma ** 2)) for j in range(size)]
         for i in range(size)]
    tot = sum(map(sum, g))
    return [[v / tot for v in row] for row in g]


def per_window_ssim(x, y, structure_only=False, L=1.0):
    """Mean SSIM (or its structure term) over valid 11x11 Gaussian windows, scalar loops."""
    w = gaussian_window()
    c1, c2 = (0.01 * L) ** 2, (0.03 * L) ** 2
    c3 = c2 / 2
    h, wd = x.shape
    vals = []
    for r in range(h - 10):
        for c in range(wd - 10):
            mx = my = 0.0
            for i in range(11):
                for j in range(11):
                    mx += w[i][j] * x[r + i, c + j]
                    my += w[i][j] * y[r + i, c + j]
            vx = vy = cxy = 0.0
            for i in range(11):
                for j in range(11):
                    dx = x[r + i, c + j] - mx
                    dy = y[r + i, c + j] - my
                    vx += w[i][j] * dx * dx
                    vy += w[i][j] * dy * dy
                    cxy += w[i][j] * dx * dy
            sx, sy = math.sqrt(vx), math.sqrt(vy)
            s = (cxy + c3) / (sx * sy + c3)
            if structure_only:
                vals.append(s)
            else:
                lum = (2 * mx * my + c1) / (mx * mx + my * my + c1)
                con = (2 * sx * sy + c2) / (vx + vy + c2)
                vals.append(lum * con * s)
    return sum(vals) / len(vals)


def two_pass_cov(f):
    c = f.shape[0]
    x = f.reshape(c, -1)
    n = x.shape[1]
    mean = [sum(x[i]) / n for i in range(c)]
    cov = np.zeros((c, c))
    for i in range(c):
        for j in range(c):
            cov[i, j] = sum((x[i, k] - mean[i]) * (x[j, k] - mean[j]) for k in range(n)) / n
    return np.array(mean), cov


def sliding_patches(f, p, s):
    """Patch vectors channel-major then row-major, centered and unit-normed."""
    c, h, w = f.shape
    out = []
    for y in range(0, h - p + 1, s):
        for x in range(0, w - p + 1, s):
            v = [f[ch, y + i, x + j] for ch in range(c) for i in range(p) for j in range(p)]
            m = sum(v) / len(v)
            v = [a - m for a in v]
            n = math.sqrt(sum(a * a for a in v))
            out.append([a / n for a in v] if n > 0 else [0.0] * len(v))
    return np.array(out)


def rotate_about_gray(rgb, degrees):
    """Axis-angle rotation about (1,1,1)/sqrt(3) via an explicit rotation matrix."""
    th = math.radians(degrees)
    ux = uy = uz = 1 / math.sqrt(3)
    c, s, t = math.cos(th), math.sin(th), 1 - math.cos(th)
    m = np.array([
        [t * ux * ux + c, t * ux * uy - s * uz, t * ux * uz + s * uy],
        [t * ux * uy + s * uz, t * uy * uy + c, t * uy * uz - s * ux],
        [t * ux * uz - s * uy, t * uy * uz + s * ux, t * uz * uz + c],
    ])
    return m @ np.asarray(rgb, dtype=float)


def brute_force_match_vec(q, r):
    """Same left-to-right accumulation as ``brute_force_match``, one column at a time."""
    s = np.zeros((q.shape[0], r.shape[0]))
    for k in range(q.shape[1]):
        s = s + q[:, k][:, None] * r[:, k][None, :]
    idx = np.argmax(s, axis=1)
    return idx, s[np.arange(q.shape[0]), idx]


def matrix_dft2(x):
    """DFT as explicit exponential matrices on both sides."""
    h, w = x.shape
    wh = np.exp(-2j * np.pi * np.outer(np.arange(h), np.arange(h)) / h)
    ww = np.exp(-2j * np.pi * np.outer(np.arange(w), np.arange(w)) / w)
    return wh @ x @ ww
