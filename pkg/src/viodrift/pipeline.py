"""End-to-end estimator execution over recorded or synthesized streams.

Both the simulator and log replay call :func:`run_estimator`, which is what
makes a replayed log reproduce the in-process estimate exactly.

Event order at equal timestamps is IMU, then VIO, then detector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .drift_estimator import DriftEstimator, GatingPolicy, MeasurementNoiseParams, MeasurementRecord
from .drift_model import DriftModelParams
from .errors import DataError
from .geometry import Pose, StaticTransform, transform_arrays
from .landmark_model import LandmarkMeasurement
from .state_fusion import (
    Calibration,
    ImuFilterConfig,
    calibrate_arrays,
    capture_calibration,
    filter_imu_block,
    fuse_series,
    vio_world_states,
)


@dataclass
class VioStream:
    """Raw (uncalibrated) odometry: VIO-frame pose, body-frame velocities."""

    t: np.ndarray
    position: np.ndarray  # (N, 3)
    orientation: np.ndarray  # (N, 4) scalar-first
    velocity_body: np.ndarray  # (N, 3)
    rates_body: np.ndarray  # (N, 3)

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class ImuStream:
    t: np.ndarray
    values: np.ndarray  # (N, 4): roll, pitch, p, q


@dataclass(frozen=True)
class EstimatorParams:
    model: DriftModelParams = field(default_factory=DriftModelParams)
    noise: MeasurementNoiseParams = field(default_factory=MeasurementNoiseParams)
    gating: GatingPolicy = field(default_factory=GatingPolicy)
    imu_filter: ImuFilterConfig = field(default_factory=ImuFilterConfig)
    imu_rate: float = 400.0
    initial_variance: float = 1e-4


@dataclass
class EstimatorOutput:
    t: np.ndarray
    vio: np.ndarray  # (N, 12) world-frame VIO
    fused: np.ndarray  # (N, 12)
    drift: np.ndarray  # (N, 8)
    imu_filtered: np.ndarray  # (N, 4) at the odometry ticks
    records: list[MeasurementRecord]
    calibration: Calibration
    stale_odometry: int = 0


def run_estimator(
    vio: VioStream,
    imu: ImuStream,
    measurements: list[LandmarkMeasurement],
    params: EstimatorParams,
    init_transform: StaticTransform,
) -> EstimatorOutput:
    n = len(vio)
    if n == 0:
        raise DataError("odometry stream is empty")
    if len(imu.t) == 0:
        raise DataError("IMU stream is empty")

    # calibration is taken on the first odometry sample
    calibration = capture_calibration(Pose(vio.position[0], vio.orientation[0]))
    positions, orientations = calibrate_arrays(calibration, vio.position, vio.orientation)
    positions, orientations = transform_arrays(init_transform, positions, orientations)
    vio_states = vio_world_states(positions, orientations, vio.velocity_body, vio.rates_body)

    imu_filtered = filter_imu_block(params.imu_filter, imu.values, 1.0 / params.imu_rate)
    imu_idx = np.searchsorted(imu.t, vio.t, side="right") - 1
    imu_at_ticks = imu_filtered[np.clip(imu_idx, 0, None)]

    estimator = DriftEstimator(params.model, params.noise, params.gating, params.initial_variance)
    pending = sorted(
        measurements,
        key=lambda m: (m.delivery_time if m.delivery_time is not None else m.timestamp, m.timestamp),
    )
    drift = np.empty((n, 8))
    k = 0
    odo_poses = vio_states[:, [0, 1, 2, 5]]
    for i in range(n):
        t = vio.t[i]
        while k < len(pending) and _delivery(pending[k]) < t:
            estimator.process(pending[k], _delivery(pending[k]))
            k += 1
        estimator.ingest_odometry(t, odo_poses[i])
        if i > 0:
            estimator.predict()
        drift[i] = estimator.state.x
        # same-timestamp detector events are handled after the odometry tick
        while k < len(pending) and _delivery(pending[k]) == t:
            estimator.process(pending[k], _delivery(pending[k]))
            k += 1

    fused = fuse_series(vio_states, drift, imu_at_ticks)
    return EstimatorOutput(
        t=np.asarray(vio.t, dtype=float),
        vio=vio_states,
        fused=fused,
        drift=drift,
        imu_filtered=imu_at_ticks,
        records=estimator.records,
        calibration=calibration,
        stale_odometry=estimator.buffer.stale_count,
    )


def _delivery(m: LandmarkMeasurement) -> float:
    return m.delivery_time if m.delivery_time is not None else m.timestamp
