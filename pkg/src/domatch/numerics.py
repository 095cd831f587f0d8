"""Symmetric eigendecomposition, feature covariance statistics and 2D DFTs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12


class EigenDecomposition(NamedTuple):
    values: np.ndarray   # descending
    vectors: np.ndarray  # orthonormal columns


@dataclass(frozen=True)
class CovStats:
    """Per-channel mean, 1/N covariance and its eigendecomposition."""

    mean: np.ndarray
    covariance: np.ndarray
    eig: EigenDecomposition

    @property
    def channels(self) -> int:
        return self.mean.shape[0]


def _check_symmetric(m) -> np.ndarray:
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    return a


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component positive, first index wins ties
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig(m) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Sweeps over all (p, q) pairs in row order until every off-diagonal entry
    is below ``1e-12 * ||M||_F`` or 100 sweeps have run. Eigenvalues are
    returned in descending order; each eigenvector has its largest-magnitude
    component positive.
    """
    a = _check_symmetric(m)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    norm = float(np.sqrt(np.sum(a * a)))
    thresh = JACOBI_TOL * norm

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.abs(a - np.diag(np.diag(a)))
        if norm == 0.0 or off.max(initial=0.0) < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < thresh:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(1.0, theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values[order], _canonical_signs(v[:, order]))


def feature_stats(f) -> CovStats:
    """Mean and 1/N covariance of a ``(C, H, W)`` feature map over its H*W samples."""
    fm = np.asarray(f, dtype=np.float64)
    if fm.ndim != 3:
        raise ValueError(f"expected (C, H, W) feature map, got shape {fm.shape}")
    c = fm.shape[0]
    x = fm.reshape(c, -1)
    n = x.shape[1]
    if n < 2:
        raise ValueError("feature statistics need at least 2 samples")
    mean = x.mean(axis=1)
    xc = x - mean[:, None]
    cov = xc @ xc.T / n
    cov = 0.5 * (cov + cov.T)
    return CovStats(mean=mean, covariance=cov, eig=sym_eig(cov))


def dft2(plane) -> np.ndarray:
    """Unnormalized forward 2D DFT of a real plane (DC at ``[0, 0]``)."""
    x = np.asarray(plane, dtype=np.float64)
    if x.ndim != 2 or min(x.shape) < 1:
        raise ValueError(f"expected a non-empty 2D plane, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("plane contains non-finite values")
    return np.fft.fft2(x)


def idft2(spec, with_residual: bool = False):
    """Inverse 2D DFT with 1/(H*W) normalization; returns the real part.

    With ``with_residual=True`` also returns the largest absolute imaginary
    part that was discarded.
    """
    s = np.asarray(spec, dtype=np.complex128)
    if s.ndim != 2:
        raise ValueError(f"expected a 2D spectrum, got shape {s.shape}")
    if not (np.all(np.isfinite(s.real)) and np.all(np.isfinite(s.imag))):
        raise ValueError("spectrum contains non-finite values")
    out = np.fft.ifft2(s)
    if with_residual:
        return out.real.copy(), float(np.max(np.abs(out.imag), initial=0.0))
    return out.real.copy()
