"""Epipolar geometry between a source frame and later target frames.

Given the relative pose of a target camera in the source camera's frame,
the fundamental matrix maps a target pixel to the coefficients of the line
in the source image on which its correspondence must lie. The line is
clipped to the image, sampled at a fixed number of points, and those sample
positions drive the feature gathering for constrained attention.

Pure-rotation pairs have no epipolar constraint; each pixel then maps to a
single warped point under the infinite homography K R K^-1, replicated to
keep the sample layout, and the result is flagged degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import Intrinsics, Pose, Trajectory, relative_pose

__all__ = [
    "DegenerateGeometryError",
    "DegenerateLineError",
    "FundamentalMatrix",
    "SampledEpipolarLine",
    "EpipolarGeometry",
    "fundamental_matrix",
    "epipole",
    "epipolar_line",
    "clip_to_image",
    "sample_line",
    "default_sample_count",
    "build_epipolar_geometry",
]

# translation norms below this give no usable epipolar constraint
_PURE_ROTATION_TOL = 1e-9
_RANK2_TOL = 1e-8


class DegenerateGeometryError(ValueError):
    """Relative motion admits no epipolar constraint (pure rotation)."""


class DegenerateLineError(DegenerateGeometryError):
    """Pixel maps to a zero line vector (it sits on the epipole)."""


@dataclass(frozen=True)
class FundamentalMatrix:
    """3x3 map from target-frame pixels to source-frame line coefficients."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"fundamental matrix must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("fundamental matrix contains non-finite values")
        s = np.linalg.svd(m, compute_uv=False)
        if s[0] <= 0.0 or s[2] / s[0] > _RANK2_TOL:
            raise ValueError(
                f"fundamental matrix must be rank 2 (sigma3/sigma1 = {s[2] / s[0]:.3e})"
            )
        object.__setattr__(self, "matrix", m)

    def normalized(self) -> np.ndarray:
        """Unit-Frobenius copy with a deterministic sign."""
        m = self.matrix / np.linalg.norm(self.matrix)
        flat = m.reshape(-1)
        lead = flat[np.argmax(np.abs(flat))]
        return -m if lead < 0.0 else m


@dataclass(frozen=True)
class SampledEpipolarLine:
    """Fixed-length sampling of one clipped epipolar segment."""

    points: np.ndarray  # (l, 2) as (x, y)
    valid: np.ndarray   # (l,) bool

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        val = np.asarray(self.valid, dtype=bool)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be (l, 2), got {pts.shape}")
        if val.shape != (pts.shape[0],):
            raise ValueError("valid mask length must match points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "valid", val)

    @property
    def l(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class EpipolarGeometry:
    """Per-pixel sampled source-frame correspondence candidates.

    points is (h*w, l, 2) in row-major pixel order of the target grid;
    valid marks usable samples. degenerate is set on the pure-rotation
    fallback, where each row holds one warped point replicated l times.
    """

    points: np.ndarray
    valid: np.ndarray
    h: int
    w: int
    degenerate: bool = False

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        val = np.asarray(self.valid, dtype=bool)
        if pts.ndim != 3 or pts.shape[2] != 2:
            raise ValueError(f"points must be (n, l, 2), got {pts.shape}")
        if pts.shape[0] != self.h * self.w:
            raise ValueError(
                f"{pts.shape[0]} rows do not cover a {self.h}x{self.w} grid"
            )
        if val.shape != pts.shape[:2]:
            raise ValueError("valid mask shape must match points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "valid", val)

    @property
    def l(self) -> int:
        return self.points.shape[1]

    def line(self, pixel: int) -> SampledEpipolarLine:
        return SampledEpipolarLine(points=self.points[pixel].copy(),
                                   valid=self.valid[pixel].copy())


def _cross_matrix(t: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -t[2], t[1]],
        [t[2], 0.0, -t[0]],
        [-t[1], t[0], 0.0],
    ])


def fundamental_matrix(rel: Pose, k_src: Intrinsics,
                       k_tgt: Intrinsics) -> FundamentalMatrix:
    """Fundamental matrix for a target camera posed relative to the source.

    rel maps target-camera coordinates into the source camera frame
    (relative_pose(src, tgt)). Raises DegenerateGeometryError for
    pure-rotation motion.
    """
    t_norm = float(np.linalg.norm(rel.t))
    if t_norm <= _PURE_ROTATION_TOL:
        raise DegenerateGeometryError(
            f"relative translation norm {t_norm:.3e} is too small"
        )
    k_src_inv_T = np.linalg.inv(k_src.matrix).T
    k_tgt_inv = np.linalg.inv(k_tgt.matrix)
    f = k_src_inv_T @ _cross_matrix(rel.t) @ rel.R @ k_tgt_inv
    return FundamentalMatrix(matrix=f)


def epipole(rel: Pose, k_src: Intrinsics) -> np.ndarray | None:
    """Projection of the target camera center into the source image.

    Returns (x, y), or None when the epipole is at infinity (motion
    parallel to the source image plane).
    """
    e = k_src.matrix @ rel.t
    if abs(e[2]) <= 1e-12 * np.linalg.norm(e):
        return None
    return e[:2] / e[2]


def _fix_line_sign(line: np.ndarray) -> np.ndarray:
    if line[0] < 0.0 or (line[0] == 0.0 and line[1] < 0.0):
        return -line
    return line


def epipolar_line(f: FundamentalMatrix, x: float, y: float) -> np.ndarray:
    """Line coefficients (a, b, c) in the source image for a target pixel.

    Normalized so a^2 + b^2 = 1 with a deterministic sign. Raises
    DegenerateLineError when the pixel maps to the zero line.
    """
    line = f.matrix @ np.array([x, y, 1.0])
    n = float(np.hypot(line[0], line[1]))
    if n < 1e-12:
        raise DegenerateLineError(
            f"pixel ({x}, {y}) maps to a zero line vector"
        )
    return _fix_line_sign(line / n)


def clip_to_image(line: np.ndarray, width: int, height: int,
                  epi: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray] | None:
    """Intersect a normalized line with the image rectangle.

    The rectangle spans pixel centers [0, width-1] x [0, height-1].
    Returns the two segment endpoints, ordered nearest-the-epipole first
    when one is given and finite, otherwise left/top first. None when the
    line misses the rectangle.
    """
    a, b, c = (float(line[0]), float(line[1]), float(line[2]))
    # parametric form: p(s) = p0 + s * v with v perpendicular to the normal
    p0 = np.array([-a * c, -b * c])
    v = np.array([-b, a])
    lo, hi = -np.inf, np.inf
    for coord, vel, limit in ((p0[0], v[0], float(width - 1)),
                              (p0[1], v[1], float(height - 1))):
        if abs(vel) < 1e-15:
            if coord < 0.0 or coord > limit:
                return None
            continue
        s0 = (0.0 - coord) / vel
        s1 = (limit - coord) / vel
        if s0 > s1:
            s0, s1 = s1, s0
        lo = max(lo, s0)
        hi = min(hi, s1)
    if not np.isfinite(lo) or not np.isfinite(hi) or lo > hi:
        return None
    e0 = p0 + lo * v
    e1 = p0 + hi * v
    if epi is not None:
        if np.sum((e1 - epi) ** 2) < np.sum((e0 - epi) ** 2):
            e0, e1 = e1, e0
    elif (e1[0], e1[1]) < (e0[0], e0[1]):
        e0, e1 = e1, e0
    return e0, e1


def sample_line(segment: tuple[np.ndarray, np.ndarray], l: int) -> SampledEpipolarLine:
    """l evenly spaced points along a segment, endpoints included."""
    if l < 2:
        raise ValueError(f"need at least 2 samples, got {l}")
    e0, e1 = (np.asarray(segment[0], dtype=np.float64),
              np.asarray(segment[1], dtype=np.float64))
    ts = np.linspace(0.0, 1.0, l)
    pts = e0[None, :] + ts[:, None] * (e1 - e0)[None, :]
    return SampledEpipolarLine(points=pts, valid=np.ones(l, dtype=bool))


def default_sample_count(h: int, w: int) -> int:
    """Sample count matching the longer image side, the resolution at which
    adjacent samples are about one pixel apart."""
    return max(h, w)


def build_epipolar_geometry(traj: Trajectory, frame: int, h: int, w: int,
                            l: int | None = None) -> EpipolarGeometry:
    """Sampled source-frame epipolar lines for every pixel of a target frame.

    Args:
        traj: relative-to-first trajectory; frame 1 is the source view.
        frame: 1-based target frame index, 2 <= frame <= traj.n.
        h, w: target/source grid resolution.
        l: samples per line; defaults to max(h, w).

    Returns:
        EpipolarGeometry over the h x w target grid. Pixels whose line
        misses the source image have all samples invalid. Pure-rotation
        motion produces the degenerate single-point fallback.
    """
    if not 2 <= frame <= traj.n:
        raise ValueError(f"frame must be in [2, {traj.n}], got {frame}")
    if l is None:
        l = default_sample_count(h, w)
    if l < 2:
        raise ValueError(f"need at least 2 samples per line, got {l}")
    intr = traj.intrinsics
    if (h, w) != (intr.height, intr.width):
        intr = intr.scaled(h, w)
    rel = relative_pose(traj.poses[0], traj.poses[frame - 1])

    uu, vv = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    pix = np.stack([uu.reshape(-1), vv.reshape(-1), np.ones(h * w)], axis=0)

    if float(np.linalg.norm(rel.t)) <= _PURE_ROTATION_TOL:
        k = intr.matrix
        hom = k @ rel.R @ np.linalg.inv(k)
        warped = hom @ pix
        with np.errstate(divide="ignore", invalid="ignore"):
            xy = warped[:2] / warped[2]
        in_front = warped[2] > 1e-12
        inside = (in_front
                  & (xy[0] >= 0.0) & (xy[0] <= w - 1)
                  & (xy[1] >= 0.0) & (xy[1] <= h - 1))
        pts = np.zeros((h * w, l, 2))
        pts[inside, :, 0] = xy[0, inside][:, None]
        pts[inside, :, 1] = xy[1, inside][:, None]
        valid = np.repeat(inside[:, None], l, axis=1)
        return EpipolarGeometry(points=pts, valid=valid, h=h, w=w,
                                degenerate=True)

    f = fundamental_matrix(rel, intr, intr)
    epi = epipole(rel, intr)
    lines = (f.matrix @ pix).T
    return _clip_sample_batch(lines, epi, h, w, l)


def _clip_sample_batch(lines: np.ndarray, epi: np.ndarray | None,
                       h: int, w: int, l: int) -> EpipolarGeometry:
    """Vectorized clip + resample across all pixels; mirrors clip_to_image
    and sample_line for each row."""
    n = lines.shape[0]
    norms = np.hypot(lines[:, 0], lines[:, 1])
    ok = norms > 1e-12
    safe = np.where(ok, norms, 1.0)
    abc = lines / safe[:, None]
    flip = (abc[:, 0] < 0.0) | ((abc[:, 0] == 0.0) & (abc[:, 1] < 0.0))
    abc[flip] *= -1.0

    a, b, c = abc[:, 0], abc[:, 1], abc[:, 2]
    p0 = np.stack([-a * c, -b * c], axis=1)
    v = np.stack([-b, a], axis=1)
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for axis, limit in ((0, float(w - 1)), (1, float(h - 1))):
        coord = p0[:, axis]
        vel = v[:, axis]
        stuck = np.abs(vel) < 1e-15
        ok &= ~(stuck & ((coord < 0.0) | (coord > limit)))
        with np.errstate(divide="ignore", invalid="ignore"):
            s0 = (0.0 - coord) / vel
            s1 = (limit - coord) / vel
        swap = s0 > s1
        s0c = np.where(swap, s1, s0)
        s1c = np.where(swap, s0, s1)
        moving = ~stuck
        lo = np.where(moving, np.maximum(lo, s0c), lo)
        hi = np.where(moving, np.minimum(hi, s1c), hi)
    ok &= np.isfinite(lo) & np.isfinite(hi) & (lo <= hi)

    lo = np.where(ok, lo, 0.0)
    hi = np.where(ok, hi, 0.0)
    e0 = p0 + lo[:, None] * v
    e1 = p0 + hi[:, None] * v
    if epi is not None:
        swap = (np.sum((e1 - epi[None, :]) ** 2, axis=1)
                < np.sum((e0 - epi[None, :]) ** 2, axis=1))
    else:
        swap = (e1[:, 0] < e0[:, 0]) | ((e1[:, 0] == e0[:, 0]) & (e1[:, 1] < e0[:, 1]))
    e0s = np.where(swap[:, None], e1, e0)
    e1s = np.where(swap[:, None], e0, e1)

    ts = np.linspace(0.0, 1.0, l)
    pts = e0s[:, None, :] + ts[None, :, None] * (e1s - e0s)[:, None, :]
    pts[~ok] = 0.0
    valid = np.repeat(ok[:, None], l, axis=1)
    return EpipolarGeometry(points=pts, valid=valid, h=h, w=w)
