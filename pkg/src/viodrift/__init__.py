"""Landmark-corrected VIO drift estimation with a simulation and evaluation harness."""

from .drift_estimator import (
    DriftEstimator,
    GatingPolicy,
    MeasurementNoiseParams,
    OdometryBuffer,
    confidence_to_variance,
    correct,
    predict,
    process_measurement,
)
from .drift_model import DriftModelParams, DriftState, build_process_noise, build_transition, propagate
from .errors import (
    ConfigurationError,
    DataError,
    DegenerateAttitudeError,
    InvalidInputError,
    NoAlignedSampleError,
)
from .evaluation import ErrorStats, SweepGrid, aggregate, run_sweep, state_errors
from .geometry import Pose, StaticTransform, apply_static_transform, wrap_angle
from .landmark_model import DetectorNoiseModel, Gate, LandmarkMeasurement, reprojection_confidence
from .pipeline import EstimatorParams, run_estimator
from .simulator import ScenarioConfig, generate_trajectory, run_scenario
from .state_fusion import Calibration, FusedState, ImuFilterConfig, apply_calibration, capture_calibration, fuse

__all__ = [
    "Calibration", "ConfigurationError", "DataError", "DegenerateAttitudeError", "DetectorNoiseModel",
    "DriftEstimator", "DriftModelParams", "DriftState", "ErrorStats", "EstimatorParams", "FusedState",
    "GatingPolicy", "Gate", "ImuFilterConfig", "InvalidInputError", "LandmarkMeasurement",
    "MeasurementNoiseParams", "NoAlignedSampleError", "OdometryBuffer", "Pose", "ScenarioConfig",
    "StaticTransform", "SweepGrid", "aggregate", "apply_calibration", "apply_static_transform",
    "build_process_noise", "build_transition", "capture_calibration", "confidence_to_variance", "correct",
    "fuse", "generate_trajectory", "predict", "process_measurement", "propagate", "reprojection_confidence",
    "run_estimator", "run_scenario", "run_sweep", "state_errors", "wrap_angle",
]
