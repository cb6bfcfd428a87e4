"""Zero-initialized adapter that injects ray maps into frame features.

A 1x1 convolution over the concatenation of a feature map and its ray map,
written out as two weight blocks. At initialization the feature block is
the identity and the ray block and bias are zero, so an untrained adapter
returns its input unchanged and training can grow the camera signal from
nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import FeatureMap
from .plucker import PluckerMap

__all__ = ["ControlAdapter", "adapter_forward"]


@dataclass(frozen=True)
class ControlAdapter:
    """Per-pixel affine map (w_feat | w_cam) with bias."""

    w_feat: np.ndarray  # (d, d)
    w_cam: np.ndarray   # (d, 6)
    bias: np.ndarray    # (d,)

    def __post_init__(self) -> None:
        w_feat = np.asarray(self.w_feat, dtype=np.float64)
        w_cam = np.asarray(self.w_cam, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        if w_feat.ndim != 2 or w_feat.shape[0] != w_feat.shape[1]:
            raise ValueError(f"w_feat must be square, got {w_feat.shape}")
        d = w_feat.shape[0]
        if w_cam.shape != (d, 6):
            raise ValueError(f"w_cam must be ({d}, 6), got {w_cam.shape}")
        if bias.shape != (d,):
            raise ValueError(f"bias must be ({d},), got {bias.shape}")
        object.__setattr__(self, "w_feat", w_feat)
        object.__setattr__(self, "w_cam", w_cam)
        object.__setattr__(self, "bias", bias)

    @property
    def d(self) -> int:
        return self.w_feat.shape[0]

    @classmethod
    def init(cls, d: int) -> "ControlAdapter":
        """Identity on features, zero on the ray channels and bias."""
        return cls(w_feat=np.eye(d), w_cam=np.zeros((d, 6)), bias=np.zeros(d))


def adapter_forward(adapter: ControlAdapter, features: FeatureMap,
                    rays: PluckerMap) -> FeatureMap:
    """Mix ray information into a feature map pixelwise.

    out[y, x] = w_feat @ f[y, x] + w_cam @ p[y, x] + bias. The two grids
    must share a resolution; downsample the ray map first when they do not.
    """
    if features.d != adapter.d:
        raise ValueError(
            f"adapter dim {adapter.d} does not match feature dim {features.d}"
        )
    if (features.h, features.w) != (rays.h, rays.w):
        raise ValueError(
            f"feature grid {features.h}x{features.w} does not match ray grid "
            f"{rays.h}x{rays.w}; downsample the ray map to the feature "
            f"resolution first"
        )
    out = (features.data @ adapter.w_feat.T
           + rays.data @ adapter.w_cam.T
           + adapter.bias)
    return FeatureMap(frame=features.frame, data=out)
