"""Per-pixel ray maps in Pluecker coordinates.

Each pixel of an h x w grid gets the 6-vector (m, d) of its viewing ray,
where d is the unit direction and m = origin x d is the moment. The moment
is invariant to sliding the origin along the ray, which is what makes the
encoding a well-defined function of the ray itself.

Maps are stored channels-last as (h, w, 6) float64 with the moment in
channels 0..2 and the direction in channels 3..5.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import Intrinsics, Pose

__all__ = [
    "PluckerMap",
    "plucker_embed",
    "downsample",
    "write_plucker",
    "read_plucker",
]

_MAGIC = b"PLK1"


@dataclass(frozen=True)
class PluckerMap:
    """A (h, w, 6) grid of rays as (moment, direction) pairs."""

    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 6:
            raise ValueError(f"ray map must be (h, w, 6), got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("ray map contains non-finite values")
        norms = np.linalg.norm(data[..., 3:6], axis=-1)
        if np.abs(norms - 1.0).max() > 1e-9:
            raise ValueError("ray directions must be unit length")
        dots = np.abs(np.sum(data[..., 0:3] * data[..., 3:6], axis=-1))
        if dots.max() > 1e-9:
            raise ValueError("ray moments must be orthogonal to directions")
        object.__setattr__(self, "data", data)

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def moment(self) -> np.ndarray:
        return self.data[..., 0:3]

    @property
    def direction(self) -> np.ndarray:
        return self.data[..., 3:6]


def plucker_embed(pose: Pose, intr: Intrinsics, h: int, w: int) -> PluckerMap:
    """Ray map of a camera on an h x w sampling grid.

    Intrinsics are rescaled when the grid differs from the sensor
    resolution. Directions are unit length; moments are camera_center x
    direction, so an identity pose at the origin yields all-zero moments.
    """
    if h < 1 or w < 1:
        raise ValueError(f"grid must be at least 1x1, got {h}x{w}")
    if (h, w) != (intr.height, intr.width):
        intr = intr.scaled(h, w)
    us = np.arange(w, dtype=np.float64)
    vs = np.arange(h, dtype=np.float64)
    uu, vv = np.meshgrid(us, vs)
    d_cam = np.stack(
        [(uu - intr.cx) / intr.fx, (vv - intr.cy) / intr.fy, np.ones_like(uu)],
        axis=-1,
    )
    d = d_cam @ pose.R.T
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    m = np.cross(np.broadcast_to(pose.t, d.shape), d)
    return PluckerMap(data=np.concatenate([m, d], axis=-1))


def downsample(pmap: PluckerMap, h: int, w: int) -> PluckerMap:
    """Resample a ray map to a coarser grid.

    Bilinear interpolation per channel with half-pixel-aware sample
    placement, then the direction is renormalized and the moment is
    re-orthogonalized against it. Interpolated rays are approximate; this
    keeps them on the Pluecker constraint surface.
    """
    if h < 1 or w < 1 or h > pmap.h or w > pmap.w:
        raise ValueError(
            f"target {h}x{w} must be within the source {pmap.h}x{pmap.w}"
        )
    sx = pmap.w / w
    sy = pmap.h / h
    xs = (np.arange(w, dtype=np.float64) + 0.5) * sx - 0.5
    ys = (np.arange(h, dtype=np.float64) + 0.5) * sy - 0.5
    xx, yy = np.meshgrid(xs, ys)
    data = _bilinear(pmap.data, xx, yy)
    d = data[..., 3:6]
    norms = np.linalg.norm(d, axis=-1, keepdims=True)
    if norms.min() < 1e-12:
        raise ValueError("interpolated ray direction collapsed to zero")
    d = d / norms
    m = data[..., 0:3]
    m = m - np.sum(m * d, axis=-1, keepdims=True) * d
    return PluckerMap(data=np.concatenate([m, d], axis=-1))


def _bilinear(grid: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = grid.shape[:2]
    x = np.clip(x, 0.0, float(w - 1))
    y = np.clip(y, 0.0, float(h - 1))
    x0 = np.clip(np.floor(x).astype(np.int64), 0, w - 1)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    return ((1.0 - fy) * (1.0 - fx) * grid[y0, x0]
            + (1.0 - fy) * fx * grid[y0, x1]
            + fy * (1.0 - fx) * grid[y1, x0]
            + fy * fx * grid[y1, x1])


def write_plucker(pmap: PluckerMap, path: str | Path) -> None:
    """Write the binary ray-map layout: an ASCII header line then
    little-endian float32 payload, row-major."""
    path = Path(path)
    header = b"%s %d %d\n" % (_MAGIC, pmap.h, pmap.w)
    payload = pmap.data.astype("<f4").tobytes(order="C")
    path.write_bytes(header + payload)


def read_plucker(path: str | Path) -> PluckerMap:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: missing ray-map header")
    parts = raw[:nl].split()
    if len(parts) != 3 or parts[0] != _MAGIC:
        raise ValueError(f"{path}: bad ray-map header {raw[:nl]!r}")
    h, w = int(parts[1]), int(parts[2])
    payload = raw[nl + 1:]
    expect = h * w * 6 * 4
    if len(payload) != expect:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, expected {expect}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, 6).astype(np.float64)
    # float32 storage loosens the unit/orthogonality constraints a little;
    # project the loaded rays back onto the constraint surface
    d = data[..., 3:6]
    norms = np.linalg.norm(d, axis=-1, keepdims=True)
    if norms.min() < 1e-6:
        raise ValueError(f"{path}: stored ray direction has near-zero norm")
    d = d / norms
    m = data[..., 0:3]
    m = m - np.sum(m * d, axis=-1, keepdims=True) * d
    return PluckerMap(data=np.concatenate([m, d], axis=-1))
