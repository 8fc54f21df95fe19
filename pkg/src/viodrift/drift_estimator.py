"""Linear Kalman filter over the drift state.

Prediction runs at the odometry rate; landmark fixes are matched to the
buffered odometry sample nearest their capture time, turned into a
position/yaw drift residual and fused with a confidence-dependent variance.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .drift_model import (
    MEASURED_IDX,
    STATE_DIM,
    YAW_IDX,
    DriftModelParams,
    DriftState,
    build_process_noise,
    build_transition,
)
from .errors import ConfigurationError, InvalidInputError, NoAlignedSampleError
from .geometry import wrap_angle
from .landmark_model import LandmarkMeasurement

H = np.zeros((4, STATE_DIM))
H[range(4), MEASURED_IDX] = 1.0

BUFFER_WINDOW = 1.0
# gaps closer than this count as a tie (absorbs rounding in k / rate timestamps)
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MeasurementNoiseParams:
    """Sigmoid map from detector confidence to measurement variance."""

    a_rv: float = 1.0
    b_rv: float = 30.0
    c_rv: float = 0.6
    d_rv: float = 1e-4

    def __post_init__(self):
        for name in ("a_rv", "b_rv", "c_rv", "d_rv"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class GatingPolicy:
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigurationError(f"gating threshold must lie in [0, 1], got {self.threshold}")


class OdometryBuffer:
    """World-frame ``(x, y, z, yaw)`` odometry for the most recent ``window`` seconds."""

    def __init__(self, window: float = BUFFER_WINDOW):
        self.window = window
        self.times: list[float] = []
        self.poses: list[np.ndarray] = []
        self.stale_count = 0

    def __len__(self) -> int:
        return len(self.times)

    def ingest(self, t: float, pose) -> bool:
        """Append a sample; returns False (and counts it) if ``t`` is not newer than the last one."""
        if self.times and t <= self.times[-1]:
            self.stale_count += 1
            return False
        self.times.append(float(t))
        self.poses.append(np.asarray(pose, dtype=float))
        cut = bisect.bisect_left(self.times, t - self.window)
        if cut:
            del self.times[:cut]
            del self.poses[:cut]
        return True

    def align(self, t_meas: float) -> tuple[float, np.ndarray]:
        """Sample whose timestamp is nearest ``t_meas``; ties go to the older sample."""
        if not self.times:
            raise NoAlignedSampleError("odometry buffer is empty")
        i = bisect.bisect_left(self.times, t_meas)
        if i == len(self.times):
            best = i - 1
        elif i == 0:
            best = 0
        else:
            older, newer = t_meas - self.times[i - 1], self.times[i] - t_meas
            best = i - 1 if older <= newer + TIE_TOLERANCE else i
        if abs(self.times[best] - t_meas) > self.window:
            raise NoAlignedSampleError(f"no odometry within {self.window} s of t={t_meas}")
        return self.times[best], self.poses[best]


def predict(state: DriftState, model: DriftModelParams, A=None, Q=None) -> DriftState:
    """One prediction step; ``A``/``Q`` may be passed in pre-built to save work."""
    if A is None:
        A = build_transition(model)
    if Q is None:
        Q = build_process_noise(model)
    x = A @ state.x
    x[YAW_IDX] = wrap_angle(float(x[YAW_IDX]))
    P = A @ state.P @ A.T + Q
    return DriftState(x, 0.5 * (P + P.T))


def measurement_residual(vio, landmark) -> np.ndarray:
    """``vio - landmark`` for ``(x, y, z, yaw)`` tuples, yaw wrapped."""
    z = np.asarray(vio, dtype=float) - np.asarray(landmark, dtype=float)
    z[3] = wrap_angle(float(z[3]))
    return z


def confidence_to_variance(c_ld: float, params: MeasurementNoiseParams) -> float:
    if not 0.0 <= c_ld <= 1.0:
        raise InvalidInputError(f"confidence must lie in [0, 1], got {c_ld}")
    # decreasing in confidence: confident fixes get the d_rv floor
    arg = params.b_rv * (c_ld - params.c_rv)
    if arg > 700.0:
        return params.d_rv
    return params.a_rv / (1.0 + math.exp(arg)) + params.d_rv


def confidence_to_covariance(c_ld: float, params: MeasurementNoiseParams) -> np.ndarray:
    return np.eye(4) * confidence_to_variance(c_ld, params)


def correct(state: DriftState, z, R) -> DriftState:
    z = np.asarray(z, dtype=float)
    R = np.asarray(R, dtype=float)
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(R))):
        raise InvalidInputError("non-finite measurement or covariance")
    P = state.P
    innovation = z - H @ state.x
    innovation[3] = wrap_angle(float(innovation[3]))
    HP = H @ P
    S = HP @ H.T + R
    G = np.linalg.solve(S, HP).T
    x = state.x + G @ innovation
    x[YAW_IDX] = wrap_angle(float(x[YAW_IDX]))
    P = P - G @ HP
    return DriftState(x, 0.5 * (P + P.T))


@dataclass
class MeasurementRecord:
    """Diagnostics for one landmark fix handed to the filter."""

    t_meas: float
    t_delivered: float
    pose: np.ndarray
    c_ld: float
    accepted: bool
    reason: str = ""
    innovation: np.ndarray | None = None
    drift_after: np.ndarray | None = None


def process_measurement(
    state: DriftState,
    buffer: OdometryBuffer,
    meas: LandmarkMeasurement,
    policy: GatingPolicy,
    noise: MeasurementNoiseParams,
) -> tuple[DriftState, bool, str]:
    """Gate, align and fuse one landmark fix.

    Returns ``(state, accepted, reason)``; when rejected the input state object
    itself is returned so nothing about it changes.
    """
    if meas.confidence < policy.threshold:
        return state, False, "low_confidence"
    try:
        _, vio_pose = buffer.align(meas.timestamp)
    except NoAlignedSampleError:
        return state, False, "no_aligned_sample"
    z = measurement_residual(vio_pose, meas.pose)
    R = confidence_to_covariance(meas.confidence, noise)
    return correct(state, z, R), True, ""


@dataclass
class DriftEstimator:
    """Stateful wrapper: owns the filter state, odometry buffer and diagnostics."""

    model: DriftModelParams = field(default_factory=DriftModelParams)
    noise: MeasurementNoiseParams = field(default_factory=MeasurementNoiseParams)
    policy: GatingPolicy = field(default_factory=GatingPolicy)
    initial_variance: float = 1e-4

    def __post_init__(self):
        self.state = DriftState(np.zeros(STATE_DIM), np.eye(STATE_DIM) * self.initial_variance)
        self.buffer = OdometryBuffer()
        self.records: list[MeasurementRecord] = []
        self._A = build_transition(self.model)
        self._Q = build_process_noise(self.model)

    def predict(self) -> None:
        self.state = predict(self.state, self.model, self._A, self._Q)

    def ingest_odometry(self, t: float, pose) -> bool:
        return self.buffer.ingest(t, pose)

    def process(self, meas: LandmarkMeasurement, t_delivered: float) -> bool:
        prior = self.state
        self.state, accepted, reason = process_measurement(
            self.state, self.buffer, meas, self.policy, self.noise
        )
        innovation = None
        if accepted:
            # recomputed for the log only; the filter already used it
            _, vio_pose = self.buffer.align(meas.timestamp)
            innovation = measurement_residual(vio_pose, meas.pose) - H @ prior.x
            innovation[3] = wrap_angle(float(innovation[3]))
        self.records.append(
            MeasurementRecord(
                meas.timestamp,
                t_delivered,
                np.asarray(meas.pose, dtype=float),
                meas.confidence,
                accepted,
                reason,
                innovation,
                self.state.x.copy(),
            )
        )
        return accepted
