"""Manipulated-face video detection from spatio-temporal texture.

The pipeline tracks a fixed-size face patch through a video, cuts it into
overlapping temporal windows, summarizes each window with directional
derivative-code histograms over the three central orthogonal planes, and
classifies the windows with linear SVMs. Per-window predictions aggregate
into per-video verdicts by majority vote with a reduced-mean score, and
the three technique classifiers OR-fuse for blind detection with
technique attribution.
"""

from .config import RunConfig
from .decision import (
    VideoVerdict,
    WindowPrediction,
    classify_video,
    fuse_and_attribute,
    majority_vote,
    reduced_mean,
)
from .descriptors import (
    KERNEL_BACKEND,
    FeatureVector,
    TemporalMode,
    lbp_top,
    ldp_histograms,
    ldp_top,
    time_reverse,
)
from .ingest import (
    Box,
    DatasetManifest,
    FrameSequence,
    LandmarkTrack,
    VideoRecord,
    load_frames,
    load_landmarks,
    load_manifest,
)
from .metrics import accuracy, attribution_confusion, auc, rates
from .svm import (
    LabeledSet,
    LinearSvmModel,
    Scaler,
    apply_scaler,
    fit_scaler,
    load_model,
    predict,
    save_model,
    train_svm,
)
from .tracking import (
    RoiTrack,
    build_roi_track,
    compute_motion,
    derive_initial_box,
    savgol_smooth,
)
from .windowing import (
    VideoVolume,
    WindowingConfig,
    extract_patch_volume,
    partition,
    select_area,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "DatasetManifest",
    "FeatureVector",
    "FrameSequence",
    "KERNEL_BACKEND",
    "LabeledSet",
    "LandmarkTrack",
    "LinearSvmModel",
    "RoiTrack",
    "RunConfig",
    "Scaler",
    "TemporalMode",
    "VideoRecord",
    "VideoVerdict",
    "VideoVolume",
    "WindowPrediction",
    "WindowingConfig",
    "accuracy",
    "apply_scaler",
    "attribution_confusion",
    "auc",
    "build_roi_track",
    "classify_video",
    "compute_motion",
    "derive_initial_box",
    "extract_patch_volume",
    "fit_scaler",
    "fuse_and_attribute",
    "lbp_top",
    "ldp_histograms",
    "ldp_top",
    "load_frames",
    "load_landmarks",
    "load_manifest",
    "load_model",
    "majority_vote",
    "partition",
    "predict",
    "rates",
    "reduced_mean",
    "savgol_smooth",
    "save_model",
    "select_area",
    "time_reverse",
    "train_svm",
]
