"""Camera-ray conditioning and epipolar-geometry toolkit.

Building blocks for conditioning image-to-video generators on camera
trajectories: per-pixel ray embeddings, epipolar-line attention with its
dense reference, a zero-initialized conditioning adapter, a guided
probability-flow sampler, trajectory metrics, and dataset curation.
"""

from .adapter import ControlAdapter, adapter_forward
from .attention import (EcaCost, EcaWeights, EpipolarFeatures, FeatureMap,
                        eca_cost, eca_forward, eca_forward_reference,
                        gather_epipolar_features, masked_dense_attention)
from .camera import (DegenerateTrajectoryError, Intrinsics, InvalidPoseError,
                     Pose, Trajectory, TrajectoryFormatError, camera_center,
                     make_relative, normalize_scale, pixel_ray, read_trajectory,
                     relative_pose, write_trajectory)
from .curation import (CurationPolicy, InsufficientFramesError, Rejection,
                       VideoAnnotation, curate, displacement, read_manifest,
                       sample_frames, stride_augment, write_manifest)
from .diffusion import (Denoiser, GaussianDenoiser, GuidanceSchedule,
                        IdentityDenoiser, NoiseSchedule, cfg_combine,
                        condition_dropout, denoising_loss, guidance_schedule,
                        ode_step, sample, score_from_denoiser)
from .epipolar import (DegenerateGeometryError, DegenerateLineError,
                       EpipolarGeometry, FundamentalMatrix, SampledEpipolarLine,
                       build_epipolar_geometry, clip_to_image, epipolar_line,
                       epipole, fundamental_matrix, sample_line)
from .metrics import (PoseErrors, canonicalize_for_eval, pose_errors,
                      rotation_error, translation_error)
from .plucker import (PluckerMap, downsample, plucker_embed, read_plucker,
                      write_plucker)
from .presets import PRESET_KINDS, TrajectoryPreset, generate_preset

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # camera
    "Intrinsics", "Pose", "Trajectory", "InvalidPoseError",
    "DegenerateTrajectoryError", "TrajectoryFormatError", "relative_pose",
    "make_relative", "normalize_scale", "pixel_ray", "camera_center",
    "read_trajectory", "write_trajectory",
    # plucker
    "PluckerMap", "plucker_embed", "downsample", "read_plucker", "write_plucker",
    # epipolar
    "FundamentalMatrix", "SampledEpipolarLine", "EpipolarGeometry",
    "DegenerateGeometryError", "DegenerateLineError", "fundamental_matrix",
    "epipole", "epipolar_line", "clip_to_image", "sample_line",
    "build_epipolar_geometry",
    # attention
    "FeatureMap", "EpipolarFeatures", "EcaWeights", "EcaCost",
    "gather_epipolar_features", "eca_forward", "eca_forward_reference",
    "masked_dense_attention", "eca_cost",
    # adapter
    "ControlAdapter", "adapter_forward",
    # diffusion
    "NoiseSchedule", "Denoiser", "GaussianDenoiser", "IdentityDenoiser",
    "GuidanceSchedule", "guidance_schedule", "score_from_denoiser",
    "cfg_combine", "condition_dropout", "ode_step", "sample", "denoising_loss",
    # metrics
    "PoseErrors", "canonicalize_for_eval", "rotation_error",
    "translation_error", "pose_errors",
    # curation
    "VideoAnnotation", "CurationPolicy", "Rejection", "InsufficientFramesError",
    "sample_frames", "stride_augment", "displacement", "curate",
    "read_manifest", "write_manifest",
    # presets
    "PRESET_KINDS", "TrajectoryPreset", "generate_preset",
]
