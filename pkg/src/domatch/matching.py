"""Cosine-similarity correspondence matching and matched-image reconstruction.

Scores are defined as the sequential dot product
``s = 0; for k: s += q[k] * r[k]`` of unit descriptors. The fast path
ranks candidates with a BLAS matrix product and then re-scores every
candidate within ``CANDIDATE_TOL`` of the row maximum with the sequential
sum, so index and score maps are bit-identical to an exhaustive loop
regardless of BLAS blocking or thread count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import metrics
from .features import DescriptorSet, PatchGeometry, extract_patches, image_to_features
from .image import as_image, to_grayscale

# BLAS rounding on unit vectors is ~dim * 1e-16; this is far above it
CANDIDATE_TOL = 1e-9
_QUERY_BLOCK = 512


@dataclass(frozen=True)
class MatchResult:
    geometry_query: PatchGeometry | None
    index_map: np.ndarray  # (count,) int64
    score_map: np.ndarray  # (count,) float64

    def grid(self, values: np.ndarray) -> np.ndarray:
        return values.reshape(self.geometry_query.grid_h, self.geometry_query.grid_w)

    def to_dict(self) -> dict:
        return {
            "geometry": None if self.geometry_query is None else self.geometry_query.to_dict(),
            "indices": [int(i) for i in self.index_map],
            "scores": [float(s) for s in self.score_map],
        }


def sequential_dot(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Row-wise dot products summed left to right over the last axis."""
    s = np.zeros(q.shape[:-1])
    for k in range(q.shape[-1]):
        s += q[..., k] * r[..., k]
    return s


def correspond(query: DescriptorSet, reference: DescriptorSet) -> MatchResult:
    """Best reference index and score for every query descriptor.

    Ties go to the smallest reference index; all-zero query descriptors score
    0 against everything and so map to index 0.
    """
    q = query.vectors
    r = reference.vectors
    if reference.count < 1:
        raise ValueError("reference descriptor set is empty")
    if q.shape[1] != r.shape[1]:
        raise ValueError(f"descriptor dim mismatch: {q.shape[1]} vs {r.shape[1]}")

    nq = q.shape[0]
    index = np.zeros(nq, dtype=np.int64)
    score = np.zeros(nq)
    live = np.flatnonzero(np.any(q != 0.0, axis=1))

    for b0 in range(0, live.size, _QUERY_BLOCK):
        rows = live[b0:b0 + _QUERY_BLOCK]
        approx = q[rows] @ r.T
        top = approx.max(axis=1)
        # every row keeps at least its own maximum, so ii covers 0..len(rows)-1
        ii, jj = np.nonzero(approx >= (top - CANDIDATE_TOL)[:, None])
        exact = sequential_dot(q[rows[ii]], r[jj])
        starts = np.flatnonzero(np.r_[True, ii[1:] != ii[:-1]])
        best = np.maximum.reduceat(exact, starts)
        hit = np.flatnonzero(exact == best[ii])
        # jj ascends within a row, so the first hit per row is the smallest index
        _, first = np.unique(ii[hit], return_index=True)
        pick = hit[first]
        index[rows[ii[pick]]] = jj[pick]
        score[rows[ii[pick]]] = exact[pick]

    geom = query.geometry
    if geom is not None and geom.count != nq:
        raise ValueError("query descriptor count does not match its geometry")
    return MatchResult(geometry_query=geom, index_map=index, score_map=score)


def _matching_plane(image) -> np.ndarray:
    img = as_image(image)
    return to_grayscale(img) if img.shape[2] == 3 else img


def color_correspond(lr, ref, geom_q: PatchGeometry, geom_r: PatchGeometry) -> MatchResult:
    """Match directly on the color (or single-channel) pixels."""
    dq = extract_patches(image_to_features(lr), geom_q)
    dr = extract_patches(image_to_features(ref), geom_r)
    return correspond(dq, dr)


def gray_correspond(lr, ref, geom_q: PatchGeometry, geom_r: PatchGeometry) -> MatchResult:
    """Match on channel-mean grayscale versions of both images."""
    dq = extract_patches(image_to_features(_matching_plane(lr)), geom_q)
    dr = extract_patches(image_to_features(_matching_plane(ref)), geom_r)
    return correspond(dq, dr)


def reconstruct_matched(result: MatchResult, ref, geom_r: PatchGeometry) -> np.ndarray:
    """Reassemble reference patches at the query positions named by the match.

    Overlaps are averaged with uniform weights; pixels no query patch covers
    take the value of the nearest covered pixel.
    """
    img = as_image(ref)
    gq = result.geometry_query
    if img.shape[:2] != (geom_r.source_h, geom_r.source_w):
        raise ValueError("reference image does not match its geometry")
    if gq.patch_size != geom_r.patch_size:
        raise ValueError("query and reference patch sizes differ")
    idx = np.asarray(result.index_map)
    if idx.size != gq.count or idx.min(initial=0) < 0 or idx.max(initial=0) >= geom_r.count:
        raise ValueError("index map is inconsistent with the geometries")

    p = gq.patch_size
    acc = np.zeros((gq.source_h, gq.source_w, img.shape[2]))
    hits = np.zeros((gq.source_h, gq.source_w))
    ry, rx = np.divmod(idx, geom_r.grid_w)
    ry *= geom_r.stride
    rx *= geom_r.stride
    # loop over in-patch offsets; each pass places one pixel of every patch
    qy, qx = np.divmod(np.arange(gq.count), gq.grid_w)
    qy *= gq.stride
    qx *= gq.stride
    for dy in range(p):
        for dx in range(p):
            np.add.at(acc, (qy + dy, qx + dx), img[ry + dy, rx + dx])
            np.add.at(hits, (qy + dy, qx + dx), 1.0)

    covered = hits > 0
    out = np.zeros_like(acc)
    out[covered] = acc[covered] / hits[covered][:, None]
    if not covered.all():
        _, (ny, nx) = ndimage.distance_transform_edt(~covered, return_indices=True)
        out = out[ny, nx]
    return out


def match_quality(lr_gray, matched_gray, global_window: bool = False) -> float:
    """SSIM-s between a query plane and its matched reconstruction."""
    return metrics.ssim_s(lr_gray, matched_gray, global_window)
