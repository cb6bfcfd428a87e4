"""Dataset curation for SfM-annotated video clips.

SfM on static shots or failed reconstructions produces camera paths that
teach a model nothing about camera control. Curation keeps clips whose
camera actually moves (displacement threshold) and whose reconstruction
is trustworthy (registered-point threshold). Frame sampling draws
fixed-length clips at a random stride so one long video yields motion at
several speeds.

Manifests are JSONL, one video per line, with keys video_id, n_frames,
point_count, trajectory_file (a path relative to the manifest).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import Trajectory, make_relative, read_trajectory

__all__ = [
    "InsufficientFramesError",
    "VideoAnnotation",
    "CurationPolicy",
    "Rejection",
    "sample_frames",
    "stride_augment",
    "displacement",
    "curate",
    "read_manifest",
    "write_manifest",
]


class InsufficientFramesError(ValueError):
    """Video is shorter than the requested clip."""


@dataclass(frozen=True)
class VideoAnnotation:
    """One video's SfM annotation."""

    video_id: str
    n_frames: int
    trajectory: Trajectory
    point_count: int
    source: str = ""

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ValueError(f"n_frames must be >= 1, got {self.n_frames}")
        if self.point_count < 0:
            raise ValueError(f"point_count must be >= 0, got {self.point_count}")
        if self.trajectory.n > self.n_frames:
            raise ValueError(
                f"trajectory has {self.trajectory.n} poses for "
                f"{self.n_frames} frames"
            )


@dataclass(frozen=True)
class CurationPolicy:
    """Acceptance thresholds and clip sampling length."""

    displacement_min: float = 0.05
    point_count_min: int = 100
    sample_count: int = 32

    def __post_init__(self) -> None:
        if self.displacement_min < 0.0:
            raise ValueError("displacement_min must be >= 0")
        if self.point_count_min < 0:
            raise ValueError("point_count_min must be >= 0")
        if self.sample_count < 2:
            raise ValueError("sample_count must be >= 2")


@dataclass(frozen=True)
class Rejection:
    """Why a video was dropped; reasons name the failed criteria."""

    video_id: str
    reasons: tuple[str, ...]


def sample_frames(n_frames: int, count: int,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Evenly strided frame indices with random stride and offset.

    The stride is uniform on [1, (n_frames - 1) // (count - 1)] and the
    start offset uniform over positions that keep the clip in range, so
    the same video contributes clips at several effective camera speeds.

    Raises InsufficientFramesError when the video has fewer than count
    frames.
    """
    if count < 2:
        raise ValueError(f"need at least 2 frames per clip, got {count}")
    if n_frames < count:
        raise InsufficientFramesError(
            f"cannot draw {count} frames from a {n_frames}-frame video"
        )
    if rng is None:
        rng = np.random.default_rng(0)
    max_stride = (n_frames - 1) // (count - 1)
    stride = int(rng.integers(1, max_stride + 1))
    span = (count - 1) * stride
    start = int(rng.integers(0, n_frames - span))
    return start + stride * np.arange(count)


def stride_augment(n_frames: int, clip_len: int = 14,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """Training-time clip draw: sample_frames at the training clip length."""
    return sample_frames(n_frames, clip_len, rng)


def displacement(traj: Trajectory) -> float:
    """Largest camera-center distance from the first camera.

    Expects a relative-to-first trajectory, where the first center is the
    origin.
    """
    return float(np.linalg.norm(traj.centers(), axis=1).max())


def curate(annotations: list[VideoAnnotation],
           policy: CurationPolicy | None = None,
           ) -> tuple[list[VideoAnnotation], list[Rejection]]:
    """Split annotations into kept clips and rejections with reasons.

    Trajectories are re-expressed relative to their first frame before the
    displacement test; raw SfM world frames are arbitrary.
    """
    if policy is None:
        policy = CurationPolicy()
    kept: list[VideoAnnotation] = []
    rejected: list[Rejection] = []
    for ann in annotations:
        reasons = []
        disp = displacement(make_relative(ann.trajectory))
        if disp < policy.displacement_min:
            reasons.append("low_displacement")
        if ann.point_count < policy.point_count_min:
            reasons.append("low_point_count")
        if reasons:
            rejected.append(Rejection(video_id=ann.video_id,
                                      reasons=tuple(reasons)))
        else:
            kept.append(ann)
    return kept, rejected


def read_manifest(path: str | Path) -> list[VideoAnnotation]:
    """Load a JSONL manifest; trajectory_file paths resolve against it."""
    path = Path(path)
    base = path.parent
    annotations = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
            traj = read_trajectory(base / doc["trajectory_file"])
            annotations.append(VideoAnnotation(
                video_id=str(doc["video_id"]),
                n_frames=int(doc["n_frames"]),
                trajectory=traj,
                point_count=int(doc["point_count"]),
                source=str(doc.get("source", "")),
            ))
        except (KeyError, ValueError, OSError) as exc:
            raise ValueError(f"{path}:{lineno}: bad manifest entry: {exc}") from exc
    return annotations


def write_manifest(annotations: list[VideoAnnotation], path: str | Path,
                   trajectory_files: dict[str, str]) -> None:
    """Write a JSONL manifest; trajectory_files maps video_id to the
    relative path recorded for that video."""
    path = Path(path)
    lines = []
    for ann in annotations:
        doc = {
            "video_id": ann.video_id,
            "n_frames": ann.n_frames,
            "point_count": ann.point_count,
            "trajectory_file": trajectory_files[ann.video_id],
        }
        if ann.source:
            doc["source"] = ann.source
        lines.append(json.dumps(doc))
    path.write_text("\n".join(lines) + ("\n" if lines else ""))
