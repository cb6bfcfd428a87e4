"""Epipolar-constrained cross-attention.

Every pixel of a target feature map attends only to features gathered
along its epipolar line in the source frame, instead of to all h*w source
pixels. Scores are masked with a large negative floor where samples are
invalid, and the output projection starts at zero so a freshly initialized
block is an exact identity on the input.

Score work per map is h*w*l*d against (h*w)^2*d for dense attention, a
factor of h*w/l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .epipolar import EpipolarGeometry, SampledEpipolarLine

__all__ = [
    "FeatureMap",
    "EpipolarFeatures",
    "EcaWeights",
    "EcaCost",
    "gather_epipolar_features",
    "eca_forward",
    "eca_forward_reference",
    "masked_dense_attention",
    "eca_cost",
]

# additive mask for forbidden attention scores; far below any realistic
# score, still safely inside float range
MASK_VALUE = -1e9


@dataclass(frozen=True)
class FeatureMap:
    """Per-pixel feature grid of one frame, channels last."""

    frame: int
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError(f"feature map must be (h, w, d), got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("feature map contains non-finite values")
        if self.frame < 1:
            raise ValueError(f"frame index must be >= 1, got {self.frame}")
        object.__setattr__(self, "data", data)

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def d(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class EpipolarFeatures:
    """Source features gathered along each target pixel's epipolar line."""

    data: np.ndarray   # (h*w, l, d)
    valid: np.ndarray  # (h*w, l)

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if data.ndim != 3:
            raise ValueError(f"gathered features must be (n, l, d), got {data.shape}")
        if valid.shape != data.shape[:2]:
            raise ValueError("valid mask shape must match features")
        if not np.all(np.isfinite(data)):
            raise ValueError("gathered features contain non-finite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "valid", valid)

    @property
    def l(self) -> int:
        return self.data.shape[1]

    @property
    def d(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class EcaWeights:
    """Projection weights of one attention block."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_out: np.ndarray

    def __post_init__(self) -> None:
        for name in ("w_q", "w_k", "w_v", "w_out"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be square, got {m.shape}")
            if m.shape != np.asarray(self.w_q).shape:
                raise ValueError("all projection weights must share one shape")
            object.__setattr__(self, name, m)

    @property
    def d(self) -> int:
        return self.w_q.shape[0]

    @classmethod
    def init(cls, d: int, rng: np.random.Generator | None = None) -> "EcaWeights":
        """Fresh block: random q/k/v projections, zero output projection.

        The zero output projection makes the block an exact identity until
        training moves it, so it can be bolted onto a pretrained model
        without disturbing it.
        """
        if rng is None:
            rng = np.random.default_rng(0)
        scale = 1.0 / math.sqrt(d)
        return cls(
            w_q=rng.normal(0.0, scale, (d, d)),
            w_k=rng.normal(0.0, scale, (d, d)),
            w_v=rng.normal(0.0, scale, (d, d)),
            w_out=np.zeros((d, d)),
        )


@dataclass(frozen=True)
class EcaCost:
    """Score-op counts for one attention pass at a given size."""

    eca_score_ops: int
    dense_score_ops: int
    ratio: float


def _lines_arrays(lines: EpipolarGeometry | Sequence[SampledEpipolarLine],
                  ) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(lines, EpipolarGeometry):
        return lines.points, lines.valid
    pts = np.stack([ln.points for ln in lines])
    valid = np.stack([ln.valid for ln in lines])
    return pts, valid


def gather_epipolar_features(source: FeatureMap,
                             lines: EpipolarGeometry | Sequence[SampledEpipolarLine],
                             backend: str | None = None) -> EpipolarFeatures:
    """Bilinearly sample source features at each line's sample points.

    Invalid samples come back as zero vectors with their mask bit off.
    The line set must cover the pixels of a grid at the source resolution.
    """
    pts, valid = _lines_arrays(lines)
    if isinstance(lines, EpipolarGeometry):
        if (lines.h, lines.w) != (source.h, source.w):
            raise ValueError(
                f"line grid {lines.h}x{lines.w} does not match "
                f"feature map {source.h}x{source.w}"
            )
    elif pts.shape[0] != source.h * source.w:
        raise ValueError(
            f"{pts.shape[0]} lines do not cover a {source.h}x{source.w} grid"
        )
    data = _kernels.bilinear_gather(source.data, pts, valid, backend=backend)
    return EpipolarFeatures(data=data, valid=valid)


def eca_forward(target: FeatureMap, gathered: EpipolarFeatures,
                weights: EcaWeights, n_heads: int = 1,
                backend: str | None = None) -> FeatureMap:
    """Residual epipolar attention over a target feature map.

    out = target + softmax(q k^T / sqrt(d_head)) v @ w_out, with q from the
    target pixel and k, v from its gathered line samples. Pixels with no
    valid sample pass through unchanged.

    The internal path folds w_k into the query and w_v/w_out into a single
    output projection, which is algebraically identical to the plain form
    and avoids projecting the (h*w, l, d) tensor twice.
    """
    d = target.d
    _check_sizes(target, gathered, weights, n_heads)
    d_head = d // n_heads
    flat = target.data.reshape(-1, d)
    q = flat @ weights.w_q
    pooled_proj = np.empty_like(flat)
    for head in range(n_heads):
        sl = slice(head * d_head, (head + 1) * d_head)
        # scores_h = (q_h . k_h) / sqrt(d_head) = q2_h . e with
        # q2_h = q_h @ w_k[:, sl]^T / sqrt(d_head)
        q2 = (q[:, sl] @ weights.w_k[:, sl].T) / math.sqrt(d_head)
        pooled = _kernels.attend_pool(q2, gathered.data, gathered.valid,
                                      backend=backend)
        pooled_proj[:, sl] = pooled @ weights.w_v[:, sl]
    out = flat + pooled_proj @ weights.w_out
    return FeatureMap(frame=target.frame, data=out.reshape(target.data.shape))


def _check_sizes(target: FeatureMap, gathered: EpipolarFeatures,
                 weights: EcaWeights, n_heads: int) -> None:
    d = target.d
    if gathered.d != d:
        raise ValueError(f"feature dim {d} != gathered dim {gathered.d}")
    if weights.d != d:
        raise ValueError(f"feature dim {d} != weight dim {weights.d}")
    if gathered.data.shape[0] != target.h * target.w:
        raise ValueError(
            f"{gathered.data.shape[0]} gathered rows do not cover "
            f"a {target.h}x{target.w} grid"
        )
    if n_heads < 1 or d % n_heads != 0:
        raise ValueError(f"head count {n_heads} must divide dim {d}")


def eca_forward_reference(target: FeatureMap, gathered: EpipolarFeatures,
                          weights: EcaWeights, n_heads: int = 1) -> FeatureMap:
    """Scalar per-pixel restatement of eca_forward, kept deliberately naive.

    Used as the ground truth the fast path is checked against; do not
    optimize it.
    """
    d = target.d
    _check_sizes(target, gathered, weights, n_heads)
    d_head = d // n_heads
    flat = target.data.reshape(-1, d)
    out = np.empty_like(flat)
    for p in range(flat.shape[0]):
        z = flat[p]
        q = z @ weights.w_q
        ctx = np.zeros(d)
        for head in range(n_heads):
            sl = slice(head * d_head, (head + 1) * d_head)
            scores = []
            cols = []
            for j in range(gathered.l):
                if not gathered.valid[p, j]:
                    continue
                k = gathered.data[p, j] @ weights.w_k
                v = gathered.data[p, j] @ weights.w_v
                scores.append(float(q[sl] @ k[sl]) / math.sqrt(d_head))
                cols.append(v[sl])
            if not scores:
                continue
            scores = np.array(scores)
            e = np.exp(scores - scores.max())
            attn = e / e.sum()
            ctx[sl] = sum(a * col for a, col in zip(attn, cols))
        out[p] = z + ctx @ weights.w_out
    return FeatureMap(frame=target.frame, data=out.reshape(target.data.shape))


def masked_dense_attention(target: FeatureMap, source: FeatureMap,
                           band: np.ndarray, weights: EcaWeights) -> FeatureMap:
    """Dense cross-attention with a boolean per-pair mask.

    The quadratic baseline: every target pixel scores every source pixel
    and forbidden pairs get MASK_VALUE added. Rows with an empty band pass
    through unchanged.
    """
    d = target.d
    if source.d != d or weights.d != d:
        raise ValueError("feature and weight dims must agree")
    n_t = target.h * target.w
    n_s = source.h * source.w
    if band.shape != (n_t, n_s):
        raise ValueError(f"band mask must be ({n_t}, {n_s}), got {band.shape}")
    z_t = target.data.reshape(-1, d)
    z_s = source.data.reshape(-1, d)
    q = z_t @ weights.w_q
    k = z_s @ weights.w_k
    v = z_s @ weights.w_v
    scores = (q @ k.T) / math.sqrt(d)
    scores = np.where(band, scores, scores + MASK_VALUE)
    peak = scores.max(axis=1, keepdims=True)
    wts = np.exp(scores - peak)
    wts[~band] = 0.0
    denom = wts.sum(axis=1, keepdims=True)
    denom = np.where(denom > 0.0, denom, 1.0)
    ctx = (wts / denom) @ v
    out = z_t + ctx @ weights.w_out
    return FeatureMap(frame=target.frame, data=out.reshape(target.data.shape))


def eca_cost(h: int, w: int, l: int, d: int) -> EcaCost:
    """Score-op counts for line-constrained vs dense attention."""
    if min(h, w, l, d) < 1:
        raise ValueError("all sizes must be positive")
    eca = h * w * l * d
    dense = (h * w) ** 2 * d
    return EcaCost(eca_score_ops=eca, dense_score_ops=dense,
                   ratio=dense / eca)
