"""Extend a small-FoV partial depth map to the full camera frame.

Multi-stage propagation, per-stage candidate selection with uncertainty,
self-supervision loss evaluators, FoV resampling and depth metrics.
"""

__version__ = "0.1.0"

from .core import DepthMap, ImageFrame, Rect, UncertaintyMap, crop, masked_median, pad_into, valid_mask
from .geometry import (CameraIntrinsics, CameraRig, PoseSE3, photometric_error, scale_translation,
                       ssim, warp)
from .propagation import StageSchedule, StageState, build_schedule, mix, run_stage, scale_adjust
from .pdc import (DistributionSet, GuidedInterpolator, NoisyOracle, PdcConfig, builtin_generators,
                  compose_full, derive_stage, make_generator, uncertainty)
from .metrics import MetricReport, ScaleProtocol, correct_scale, evaluate, evaluate_protocol
from .resample import PartialDepth, ResampleMode, resample
from .scene import default_rig, render_scene

__all__ = [
    "DepthMap", "ImageFrame", "Rect", "UncertaintyMap", "crop", "masked_median", "pad_into",
    "valid_mask", "CameraIntrinsics", "CameraRig", "PoseSE3", "photometric_error",
    "scale_translation", "ssim", "warp", "StageSchedule", "StageState", "build_schedule", "mix",
    "run_stage", "scale_adjust", "DistributionSet", "GuidedInterpolator", "NoisyOracle",
    "PdcConfig", "builtin_generators", "compose_full", "derive_stage", "make_generator",
    "uncertainty", "MetricReport", "ScaleProtocol", "correct_scale", "evaluate", "evaluate_protocol",
    "PartialDepth", "ResampleMode", "resample", "default_rig", "render_scene",
]
