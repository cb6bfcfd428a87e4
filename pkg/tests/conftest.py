"""Shared helpers for the test suite.

Random geometry comes from seeded generators only, so every test is
reproducible from its stated seed.
"""

from __future__ import annotations

import numpy as np
import pytest

from epirays import Intrinsics, Pose, Trajectory


def rotation_from(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish proper rotation via QR of a Gaussian matrix."""
    m = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def pose_from(rng: np.random.Generator, t_scale: float = 1.0) -> Pose:
    return Pose(rotation_from(rng), rng.standard_normal(3) * t_scale)


def trajectory_from(rng: np.random.Generator, n: int,
                    intr: Intrinsics | None = None,
                    t_scale: float = 1.0) -> Trajectory:
    if intr is None:
        intr = Intrinsics(fx=100.0, fy=100.0, cx=15.5, cy=15.5,
                          width=32, height=32)
    poses = [pose_from(rng, t_scale) for _ in range(n)]
    return Trajectory(poses=tuple(poses), intrinsics=intr)


def trajectory_of(poses, intr: Intrinsics | None = None) -> Trajectory:
    if intr is None:
        intr = Intrinsics(fx=100.0, fy=100.0, cx=15.5, cy=15.5,
                          width=32, height=32)
    return Trajectory(poses=tuple(poses), intrinsics=intr)


def axis_rotation(axis: int, angle: float) -> np.ndarray:
    """Rotation by angle about a coordinate axis (0=x, 1=y, 2=z)."""
    c, s = np.cos(angle), np.sin(angle)
    r = np.eye(3)
    i, j = (axis + 1) % 3, (axis + 2) % 3
    r[i, i] = c
    r[j, j] = c
    r[i, j] = -s
    r[j, i] = s
    return r


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_intrinsics() -> Intrinsics:
    return Intrinsics(fx=40.0, fy=50.0, cx=7.5, cy=7.5, width=16, height=16)
