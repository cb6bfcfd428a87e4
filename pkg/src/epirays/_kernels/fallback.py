"""Vectorized numpy implementations of the hot kernels.

These mirror the compiled extension exactly (same clamping, same
accumulation order per sample point) so either backend can serve a request.
"""

from __future__ import annotations

import numpy as np


def attend_pool(q: np.ndarray, feats: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Masked softmax pooling of per-row sample features.

    Args:
        q: (n, d) pre-scaled query vectors.
        feats: (n, l, d) sample features, one row of l candidates per query.
        valid: (n, l) boolean mask; invalid samples are excluded from the
            softmax entirely.

    Returns:
        (n, d) array where row i is sum_j softmax_j(q_i . f_ij) * f_ij over
        valid j. Rows with no valid samples come back all zero.
    """
    q = np.ascontiguousarray(q, dtype=np.float64)
    feats = np.ascontiguousarray(feats, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    scores = np.einsum("nd,nld->nl", q, feats)
    scores = np.where(valid, scores, -np.inf)
    peak = scores.max(axis=1, keepdims=True)
    # rows with no valid sample have peak -inf; shift by 0 there to avoid inf-inf
    peak = np.where(np.isfinite(peak), peak, 0.0)
    weights = np.exp(scores - peak)
    weights[~valid] = 0.0
    denom = weights.sum(axis=1, keepdims=True)
    denom = np.where(denom > 0.0, denom, 1.0)
    attn = weights / denom
    return np.einsum("nl,nld->nd", attn, feats)


def bilinear_gather(src: np.ndarray, pts: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Bilinear sampling of a (h, w, d) grid at continuous pixel positions.

    Coordinates follow the grid-center convention: (0, 0) is the center of
    the top-left cell, x runs along width. Out-of-range positions clamp to
    the border. Invalid samples produce zero vectors.

    Args:
        src: (h, w, d) feature grid.
        pts: (n, l, 2) sample positions as (x, y).
        valid: (n, l) boolean mask.

    Returns:
        (n, l, d) gathered features.
    """
    src = np.ascontiguousarray(src, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    h, w, _ = src.shape
    x = np.clip(pts[..., 0], 0.0, float(w - 1))
    y = np.clip(pts[..., 1], 0.0, float(h - 1))
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    x0 = np.clip(x0, 0, w - 1)
    y0 = np.clip(y0, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    wx = fx[..., None]
    wy = fy[..., None]
    out = (1.0 - wy) * (1.0 - wx) * src[y0, x0]
    out += (1.0 - wy) * wx * src[y0, x1]
    out += wy * (1.0 - wx) * src[y1, x0]
    out += wy * wx * src[y1, x1]
    out[~valid] = 0.0
    return out
