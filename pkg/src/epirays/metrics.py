"""Pose-accuracy metrics between an estimated and a reference trajectory.

Both trajectories are brought into the same gauge first: re-expressed
relative to their first frame and scaled to unit maximum camera-center
distance. Rotation error sums per-frame geodesic angles; translation
error sums per-frame center distances. Neither depends on the arbitrary
world frame or scale of either input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import Trajectory, make_relative, normalize_scale

__all__ = [
    "PoseErrors",
    "canonicalize_for_eval",
    "rotation_error",
    "translation_error",
    "pose_errors",
]


@dataclass(frozen=True)
class PoseErrors:
    """Summed and per-frame pose errors (radians, unit-scale distances)."""

    r_err: float
    t_err: float
    per_frame_r: np.ndarray
    per_frame_t: np.ndarray


def canonicalize_for_eval(traj: Trajectory) -> Trajectory:
    """Relative-to-first, then unit max center distance."""
    return normalize_scale(make_relative(traj))


def _check_pair(out: Trajectory, ref: Trajectory) -> None:
    if out.n != ref.n:
        raise ValueError(
            f"trajectories differ in length: {out.n} vs {ref.n}"
        )


def rotation_error(out: Trajectory, ref: Trajectory) -> float:
    """Sum over frames of the geodesic angle between rotations.

    The cosine argument is clamped to [-1, 1]; round-off on nearly equal
    rotations would otherwise push it out of the arccos domain.
    """
    return float(np.sum(_per_frame_angles(out, ref)))


def _per_frame_angles(out: Trajectory, ref: Trajectory) -> np.ndarray:
    _check_pair(out, ref)
    angles = np.empty(out.n)
    for i, (p, q) in enumerate(zip(out.poses, ref.poses)):
        if np.array_equal(p.R, q.R):
            # exact answer; the trace of R.T @ R rounds below 3 for many
            # float rotations and would turn zero into ~1e-8
            angles[i] = 0.0
            continue
        tr = float(np.trace(p.R.T @ q.R))
        angles[i] = np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))
    return angles


def translation_error(out: Trajectory, ref: Trajectory) -> float:
    """Sum over frames of camera-center distances."""
    return float(np.sum(_per_frame_dists(out, ref)))


def _per_frame_dists(out: Trajectory, ref: Trajectory) -> np.ndarray:
    _check_pair(out, ref)
    return np.linalg.norm(out.centers() - ref.centers(), axis=1)


def pose_errors(out: Trajectory, ref: Trajectory,
                canonicalize: bool = True) -> PoseErrors:
    """Both error metrics at once, canonicalizing the inputs by default."""
    if canonicalize:
        out = canonicalize_for_eval(out)
        ref = canonicalize_for_eval(ref)
    per_r = _per_frame_angles(out, ref)
    per_t = _per_frame_dists(out, ref)
    return PoseErrors(
        r_err=float(per_r.sum()),
        t_err=float(per_t.sum()),
        per_frame_r=per_r,
        per_frame_t=per_t,
    )
