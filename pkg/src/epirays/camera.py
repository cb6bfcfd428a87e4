"""Camera intrinsics, poses, trajectories, and annotation-file parsing.

Extrinsics use the camera-to-world convention throughout: a camera-frame
point x maps to R @ x + t, so t is the camera center in world units.
Annotation files on disk store world-to-camera rows (the usual SfM export
layout); the parser and writer convert at the boundary.

Continuous pixel coordinates put (0, 0) at the center of the top-left
pixel, x along width. Every sampling grid in the package uses this
convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "InvalidPoseError",
    "DegenerateTrajectoryError",
    "TrajectoryFormatError",
    "Intrinsics",
    "Pose",
    "Trajectory",
    "relative_pose",
    "make_relative",
    "normalize_scale",
    "pixel_ray",
    "camera_center",
    "read_trajectory",
    "write_trajectory",
]

# orthonormality slack for rotation blocks; composed rotations stay far below
_ROT_TOL = 1e-9
# camera-center spread below this cannot fix a scale
_SCALE_TOL = 1e-12


class InvalidPoseError(ValueError):
    """Rotation block is not a proper orthonormal matrix."""


class DegenerateTrajectoryError(ValueError):
    """All camera centers coincide, so the trajectory has no scale."""


class TrajectoryFormatError(ValueError):
    """Annotation file does not match the expected layout."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixel units."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not (self.fx > 0.0 and self.fy > 0.0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")
        if not (0.0 <= self.cx <= self.width):
            raise ValueError(f"cx={self.cx} outside [0, {self.width}]")
        if not (0.0 <= self.cy <= self.height):
            raise ValueError(f"cy={self.cy} outside [0, {self.height}]")

    @property
    def matrix(self) -> np.ndarray:
        """3x3 calibration matrix."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def scaled(self, height: int, width: int) -> "Intrinsics":
        """Intrinsics for the same camera resampled to a height x width grid.

        Uses the half-pixel-aware mapping u' = (u + 0.5) * s - 0.5 so grid
        centers line up with the continuous coordinate convention.
        """
        sx = width / self.width
        sy = height / self.height
        return Intrinsics(
            fx=self.fx * sx,
            fy=self.fy * sy,
            cx=(self.cx + 0.5) * sx - 0.5,
            cy=(self.cy + 0.5) * sy - 0.5,
            width=width,
            height=height,
        )


@dataclass(frozen=True)
class Pose:
    """Camera-to-world rigid transform. t is the camera center."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self) -> None:
        R = np.array(self.R, dtype=np.float64)
        t = np.array(self.t, dtype=np.float64)
        if R.shape != (3, 3):
            raise InvalidPoseError(f"rotation must be 3x3, got {R.shape}")
        if t.shape != (3,):
            raise InvalidPoseError(f"translation must be a 3-vector, got {t.shape}")
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(t)):
            raise InvalidPoseError("pose contains non-finite values")
        err = np.abs(R.T @ R - np.eye(3)).max()
        if err > _ROT_TOL:
            raise InvalidPoseError(f"rotation is not orthonormal (residual {err:.3e})")
        det = float(np.linalg.det(R))
        if abs(det - 1.0) > _ROT_TOL:
            raise InvalidPoseError(f"rotation has determinant {det:.12f}, expected 1")
        object.__setattr__(self, "R", _readonly(R))
        object.__setattr__(self, "t", _readonly(t))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(R=np.eye(3), t=np.zeros(3))

    @classmethod
    def from_world_to_camera(cls, R_wc: np.ndarray, t_wc: np.ndarray) -> "Pose":
        """Invert a world-to-camera [R | t] block into a camera-to-world pose."""
        R_wc = np.asarray(R_wc, dtype=np.float64)
        t_wc = np.asarray(t_wc, dtype=np.float64)
        return cls(R=R_wc.T, t=-R_wc.T @ t_wc)

    def world_to_camera(self) -> tuple[np.ndarray, np.ndarray]:
        """The inverse transform as an (R, t) pair."""
        return self.R.T.copy(), -self.R.T @ self.t

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous camera-to-world matrix."""
        m = np.eye(4)
        m[:3, :3] = self.R
        m[:3, 3] = self.t
        return m

    def inverse(self) -> "Pose":
        return Pose(R=self.R.T, t=-self.R.T @ self.t)

    def compose(self, other: "Pose") -> "Pose":
        """self after other: (self o other)(x) = self(other(x))."""
        return Pose(R=self.R @ other.R, t=self.R @ other.t + self.t)


@dataclass(frozen=True)
class Trajectory:
    """An ordered camera path with shared intrinsics."""

    poses: tuple[Pose, ...]
    intrinsics: Intrinsics

    def __post_init__(self) -> None:
        poses = tuple(self.poses)
        if len(poses) < 1:
            raise ValueError("trajectory needs at least one pose")
        object.__setattr__(self, "poses", poses)

    @property
    def n(self) -> int:
        return len(self.poses)

    def centers(self) -> np.ndarray:
        """(n, 3) array of camera centers."""
        return np.stack([p.t for p in self.poses])


def relative_pose(src: Pose, tgt: Pose) -> Pose:
    """Pose of tgt expressed in src's camera frame (src^-1 o tgt)."""
    return src.inverse().compose(tgt)


def make_relative(traj: Trajectory) -> Trajectory:
    """Re-express every pose relative to the first frame.

    The first output pose is the identity by construction; the remaining
    poses are pose_1^-1 o pose_i. Applying this twice changes nothing.
    """
    base = traj.poses[0].inverse()
    poses = [Pose.identity()]
    poses.extend(base.compose(p) for p in traj.poses[1:])
    return Trajectory(poses=tuple(poses), intrinsics=traj.intrinsics)


def normalize_scale(traj: Trajectory) -> Trajectory:
    """Scale translations so the farthest camera center sits at distance 1.

    Expects a relative-to-first trajectory. Raises DegenerateTrajectoryError
    when every center is at the origin (pure-rotation paths have no scale).
    """
    first = traj.poses[0]
    if (np.abs(first.R - np.eye(3)).max() > _ROT_TOL
            or np.abs(first.t).max() > _ROT_TOL):
        raise ValueError("normalize_scale expects a relative-to-first trajectory")
    dists = np.linalg.norm(traj.centers(), axis=1)
    scale = float(dists.max())
    if scale < _SCALE_TOL:
        raise DegenerateTrajectoryError(
            f"max camera-center distance {scale:.3e} is too small to normalize"
        )
    poses = tuple(Pose(R=p.R, t=p.t / scale) for p in traj.poses)
    return Trajectory(poses=poses, intrinsics=traj.intrinsics)


def pixel_ray(pose: Pose, intr: Intrinsics, u: float, v: float) -> tuple[np.ndarray, np.ndarray]:
    """World-space ray through a pixel.

    Args:
        pose: camera-to-world pose.
        intr: pinhole intrinsics.
        u, v: continuous pixel coordinates (fractional allowed).

    Returns:
        (origin, direction): the camera center and a unit direction
        R @ K^-1 @ (u, v, 1), normalized.
    """
    d_cam = np.array([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0])
    d = pose.R @ d_cam
    return pose.t.copy(), d / np.linalg.norm(d)


def camera_center(pose: Pose) -> np.ndarray:
    return pose.t.copy()


# ---------------------------------------------------------------------------
# annotation files
#
# Text layout, one frame per line, world-to-camera rows:
#   frame_index fx fy cx cy r11 r12 r13 t1 r21 r22 r23 t2 r31 r32 r33 t3
# The JSON layout carries the same fields plus explicit width/height.

_FIELDS_PER_LINE = 17


def _pose_from_wc_fields(vals: list[float]) -> Pose:
    m = np.array(vals, dtype=np.float64).reshape(3, 4)
    return Pose.from_world_to_camera(m[:, :3], m[:, 3])


def _wc_fields(pose: Pose) -> list[float]:
    R_wc, t_wc = pose.world_to_camera()
    m = np.hstack([R_wc, t_wc[:, None]])
    return [float(x) for x in m.reshape(-1)]


def _infer_size(cx: float, cy: float) -> tuple[int, int]:
    # principal point near the image center is the only size cue the text
    # layout carries
    return max(1, round(2.0 * cy)), max(1, round(2.0 * cx))


def read_trajectory(path: str | Path, width: int | None = None,
                    height: int | None = None) -> Trajectory:
    """Parse a trajectory annotation file (text or JSON).

    Image size is taken from the arguments when given, from the JSON fields
    when present, and otherwise inferred as twice the principal point.
    """
    path = Path(path)
    text = path.read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _read_json(stripped, width, height)
    return _read_text(text, width, height, path)


def _read_text(text: str, width: int | None, height: int | None,
               path: Path) -> Trajectory:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != _FIELDS_PER_LINE:
            raise TrajectoryFormatError(
                f"{path}:{lineno}: expected {_FIELDS_PER_LINE} fields, got {len(parts)}"
            )
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise TrajectoryFormatError(f"{path}:{lineno}: {exc}") from exc
        rows.append(vals)
    if not rows:
        raise TrajectoryFormatError(f"{path}: no frames found")
    return _assemble(rows, width, height)


def _read_json(text: str, width: int | None, height: int | None) -> Trajectory:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TrajectoryFormatError(f"bad JSON trajectory: {exc}") from exc
    frames = doc.get("frames")
    if not frames:
        raise TrajectoryFormatError("JSON trajectory has no frames")
    rows = []
    try:
        for fr in frames:
            vals = [float(fr["frame_index"]), float(fr["fx"]), float(fr["fy"]),
                    float(fr["cx"]), float(fr["cy"])]
            pose = np.array(fr["pose"], dtype=np.float64)
            if pose.shape != (3, 4):
                raise TrajectoryFormatError(
                    f"frame {fr['frame_index']}: pose must be 3x4, got {pose.shape}"
                )
            vals.extend(float(x) for x in pose.reshape(-1))
            rows.append(vals)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TrajectoryFormatError):
            raise
        raise TrajectoryFormatError(f"bad JSON trajectory frame: {exc}") from exc
    if width is None and "width" in doc:
        width = int(doc["width"])
    if height is None and "height" in doc:
        height = int(doc["height"])
    return _assemble(rows, width, height)


def _assemble(rows: list[list[float]], width: int | None,
              height: int | None) -> Trajectory:
    fx, fy, cx, cy = rows[0][1:5]
    for vals in rows[1:]:
        if not np.allclose(vals[1:5], [fx, fy, cx, cy], rtol=0.0, atol=1e-9):
            raise TrajectoryFormatError("intrinsics differ between frames")
    if width is None or height is None:
        ih, iw = _infer_size(cx, cy)
        width = iw if width is None else width
        height = ih if height is None else height
    intr = Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy, width=width, height=height)
    try:
        poses = tuple(_pose_from_wc_fields(vals[5:]) for vals in rows)
    except InvalidPoseError as exc:
        raise TrajectoryFormatError(str(exc)) from exc
    return Trajectory(poses=poses, intrinsics=intr)


def write_trajectory(traj: Trajectory, path: str | Path) -> None:
    """Write a trajectory annotation file; .json suffix selects JSON layout."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        _write_json(traj, path)
    else:
        _write_text(traj, path)


def _write_text(traj: Trajectory, path: Path) -> None:
    intr = traj.intrinsics
    lines = []
    for i, pose in enumerate(traj.poses, start=1):
        fields = [float(i), intr.fx, intr.fy, intr.cx, intr.cy]
        fields.extend(_wc_fields(pose))
        lines.append(" ".join(f"{x:.17g}" for x in fields))
    path.write_text("\n".join(lines) + "\n")


def _write_json(traj: Trajectory, path: Path) -> None:
    intr = traj.intrinsics
    frames = []
    for i, pose in enumerate(traj.poses, start=1):
        vals = _wc_fields(pose)
        frames.append({
            "frame_index": i,
            "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
            "pose": [vals[0:4], vals[4:8], vals[8:12]],
        })
    doc = {"width": intr.width, "height": intr.height, "frames": frames}
    path.write_text(json.dumps(doc, indent=1) + "\n")
