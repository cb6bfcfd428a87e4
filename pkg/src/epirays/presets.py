"""Synthetic camera paths for demos and smoke tests.

Five desk-scale motion archetypes. Every preset is returned relative to
its first frame and, except for the pure-rotation pan, normalized to unit
maximum camera-center distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import (DegenerateTrajectoryError, Intrinsics, Pose, Trajectory,
                     make_relative, normalize_scale)

__all__ = ["PRESET_KINDS", "TrajectoryPreset", "generate_preset", "default_intrinsics"]

PRESET_KINDS = ("orbit", "dolly", "pan", "truck", "spiral")


def default_intrinsics(width: int = 256, height: int = 256) -> Intrinsics:
    """Mid-range horizontal field of view, centered principal point."""
    return Intrinsics(fx=float(width), fy=float(width), cx=width / 2.0,
                      cy=height / 2.0, width=width, height=height)


@dataclass(frozen=True)
class TrajectoryPreset:
    """A named motion archetype with its sampling parameters."""

    kind: str
    n: int = 14
    magnitude: float = 1.0
    intrinsics: Intrinsics | None = None

    def __post_init__(self) -> None:
        if self.kind not in PRESET_KINDS:
            raise ValueError(
                f"unknown preset {self.kind!r}; choose one of {PRESET_KINDS}"
            )
        if self.n < 2:
            raise ValueError(f"need at least 2 frames, got {self.n}")
        if self.magnitude <= 0.0:
            raise ValueError(f"magnitude must be positive, got {self.magnitude}")


def _look_at(position: np.ndarray, target: np.ndarray) -> Pose:
    """Camera at position with its optical axis through target.

    The up reference is +y, matching the identity camera: looking down +z
    from the origin gives exactly the identity rotation.
    """
    forward = target - position
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise ValueError("look-at target coincides with the camera")
    forward = forward / norm
    up = np.array([0.0, 1.0, 0.0])
    right = np.cross(up, forward)
    rn = np.linalg.norm(right)
    if rn < 1e-12:
        raise ValueError("view direction is parallel to the up axis")
    right = right / rn
    cam_y = np.cross(forward, right)
    return Pose(R=np.stack([right, cam_y, forward], axis=1), t=position)


def _raw_poses(kind: str, n: int, mag: float) -> list[Pose]:
    ts = np.linspace(0.0, 1.0, n)
    if kind == "dolly":
        return [Pose(R=np.eye(3), t=np.array([0.0, 0.0, mag * t])) for t in ts]
    if kind == "truck":
        return [Pose(R=np.eye(3), t=np.array([mag * t, 0.0, 0.0])) for t in ts]
    if kind == "pan":
        # yaw in place; magnitude is the total sweep in radians
        poses = []
        for t in ts:
            a = mag * t
            r = np.array([
                [np.cos(a), 0.0, np.sin(a)],
                [0.0, 1.0, 0.0],
                [-np.sin(a), 0.0, np.cos(a)],
            ])
            poses.append(Pose(R=r, t=np.zeros(3)))
        return poses
    if kind == "orbit":
        # 60-degree arc looking at the center; the first-to-last chord of
        # a 60-degree arc equals the radius, so after unit-max-distance
        # normalization the orbit radius itself comes out as 1
        poses = []
        for t in ts:
            a = np.pi / 3.0 * t
            pos = mag * np.array([np.sin(a), 0.0, -np.cos(a)])
            poses.append(_look_at(pos, np.zeros(3)))
        return poses
    if kind == "spiral":
        # helix around the vertical axis through the look-at point
        poses = []
        for t in ts:
            a = 1.5 * np.pi * t
            pos = np.array([
                mag * np.sin(a),
                0.4 * mag * t,
                -mag * np.cos(a),
            ])
            poses.append(_look_at(pos, np.array([0.0, 0.4 * mag * t, 0.0])))
        return poses
    raise ValueError(f"unknown preset kind {kind!r}")


def generate_preset(preset: TrajectoryPreset) -> Trajectory:
    """Build a preset trajectory, canonicalized and scale-normalized.

    The pan preset never moves the camera center; it is returned
    unnormalized since it has no scale to fix.
    """
    intr = preset.intrinsics or default_intrinsics()
    poses = _raw_poses(preset.kind, preset.n, preset.magnitude)
    traj = make_relative(Trajectory(poses=tuple(poses), intrinsics=intr))
    try:
        return normalize_scale(traj)
    except DegenerateTrajectoryError:
        return traj
