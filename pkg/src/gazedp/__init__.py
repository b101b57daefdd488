"""Differentially private release of aggregated eye-tracking heatmaps.

The pipeline: rasterize fixations into per-observer gaze maps, cap each
map to bound one observer's influence, aggregate, add calibrated
Gaussian or Laplacian noise, and render the result as a heatmap.
Auditing tools demonstrate why the noise is necessary and check the
privacy guarantee empirically.
"""

from .audit import (AttackReport, DpAuditReport, attack_random_selection,
                    audit_additive_mechanism, reconstruct_noise_free)
from .capopt import CapSearchResult, expected_mse, optimize_cap
from .core import (AggregateMap, Fixation, GazeCollection, GazeMap, GridSpec,
                   Heatmap, aggregate, cap_collection, cap_gaze_map,
                   collection_from_counts, convolve_heatmap,
                   downsample_collection, downsample_gaze_map,
                   rasterize_fixations)
from .errors import (GaussianDeltaError, GazeDPError, GridMismatchError,
                     InsufficientTrialsError, ParseError, ValidationError,
                     ZeroVarianceError)
from .kernels import BACKEND
from .mechanisms import (GAUSSIAN, LAPLACIAN, CalibrationParams,
                         NoiseCalibration, PrivacyLevel, SelectionConfig,
                         add_calibrated_noise, calibrate_gaussian,
                         calibrate_laplacian, mech_gaussian, mech_laplacian,
                         mech_noise_free, mech_random_select, privacy_preset)
from .metrics import (SweepRow, UtilityScore, cc, mse, score, sweep_to_csv,
                      tradeoff_sweep)
from .rng import Seed

__version__ = "0.1.0"

__all__ = [
    "AggregateMap", "AttackReport", "BACKEND", "CalibrationParams",
    "CapSearchResult", "DpAuditReport", "Fixation", "GAUSSIAN",
    "GaussianDeltaError", "GazeCollection", "GazeDPError", "GazeMap",
    "GridMismatchError", "GridSpec", "Heatmap", "InsufficientTrialsError",
    "LAPLACIAN", "NoiseCalibration", "ParseError", "PrivacyLevel", "Seed",
    "SelectionConfig", "SweepRow", "UtilityScore", "ValidationError",
    "ZeroVarianceError", "add_calibrated_noise", "aggregate",
    "attack_random_selection", "audit_additive_mechanism", "calibrate_gaussian",
    "calibrate_laplacian", "cap_collection", "cap_gaze_map", "cc",
    "collection_from_counts", "convolve_heatmap", "downsample_collection",
    "downsample_gaze_map", "expected_mse", "mech_gaussian", "mech_laplacian",
    "mech_noise_free", "mech_random_select", "mse", "optimize_cap",
    "privacy_preset", "rasterize_fixations", "reconstruct_noise_free",
    "score", "sweep_to_csv", "tradeoff_sweep",
]
