"""Calibration, IMU attitude filtering and drift-corrected state fusion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .drift_model import DriftState
from .errors import ConfigurationError, InvalidInputError
from .geometry import (
    IDENTITY_QUAT,
    Pose,
    compose_orientation,
    invert_orientation,
    matvec,
    quat_to_euler,
    quat_to_rotation,
    rotate_vector,
    wrap_angle,
)

STATE_COLUMNS = ("x", "y", "z", "roll", "pitch", "yaw", "vx", "vy", "vz", "p", "q", "r")


@dataclass(frozen=True)
class OdometrySample:
    """One VIO output: pose in the odometry frame, body-frame velocities."""

    t: float
    position: np.ndarray
    orientation: np.ndarray
    velocity_body: np.ndarray
    rates_body: np.ndarray


@dataclass(frozen=True)
class FusedState:
    position: np.ndarray
    orientation: np.ndarray  # roll, pitch, yaw
    velocity: np.ndarray  # world frame
    rates: np.ndarray  # body frame p, q, r

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.orientation, self.velocity, self.rates])


@dataclass(frozen=True)
class Calibration:
    """Reference VIO pose captured once on the level start podium."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())


def capture_calibration(raw_pose: Pose) -> Calibration:
    return Calibration(raw_pose.position.copy(), raw_pose.orientation.copy())


def apply_calibration(cal: Calibration, raw: OdometrySample) -> OdometrySample:
    position, orientation = calibrate_arrays(cal, raw.position, raw.orientation)
    return OdometrySample(raw.t, position, orientation, raw.velocity_body, raw.rates_body)


def calibrate_arrays(cal: Calibration, positions, orientations):
    """Stacked form of ``apply_calibration`` (positions (...,3), quaternions (...,4))."""
    positions = np.asarray(positions, dtype=float) - cal.position
    orientations = compose_orientation(invert_orientation(cal.orientation), orientations)
    return positions, orientations


# -- IMU attitude / rate filtering -------------------------------------------

IMU_CHANNELS = ("roll", "pitch", "p", "q")


@dataclass(frozen=True)
class ImuFilterConfig:
    cutoff_hz: float = 30.0
    notch_hz: float = 80.0
    notch_bandwidth_hz: float = 20.0

    def __post_init__(self):
        for name in ("cutoff_hz", "notch_hz", "notch_bandwidth_hz"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"imu filter {name} must be > 0, got {getattr(self, name)}")

    def coefficients(self, dt: float):
        """``(lowpass_alpha, notch_b, notch_a)`` for sample period ``dt``."""
        if not dt > 0:
            raise InvalidInputError(f"dt must be > 0, got {dt}")
        fs = 1.0 / dt
        if self.notch_hz >= fs / 2:
            raise ConfigurationError(f"notch center {self.notch_hz} Hz is above Nyquist for {fs} Hz sampling")
        alpha = 1.0 - math.exp(-2.0 * math.pi * self.cutoff_hz * dt)
        # RBJ biquad notch
        w0 = 2.0 * math.pi * self.notch_hz * dt
        q = self.notch_hz / self.notch_bandwidth_hz
        a_bw = math.sin(w0) / (2.0 * q)
        cw = math.cos(w0)
        a0 = 1.0 + a_bw
        b = np.array([1.0, -2.0 * cw, 1.0]) / a0
        a = np.array([1.0, -2.0 * cw / a0, (1.0 - a_bw) / a0])
        return alpha, b, a


class ImuFilterState:
    """Per-channel first-order low-pass followed by a biquad notch.

    The first sample seeds every stage at steady state so a constant input
    passes through without a start-up transient.
    """

    def __init__(self, config: ImuFilterConfig | None = None):
        self.config = config or ImuFilterConfig()
        self._dt = None
        self._coeffs = None
        self.lowpass = None
        self.notch_x = None  # x[n-1], x[n-2]
        self.notch_y = None  # y[n-1], y[n-2]

    def _coefficients(self, dt):
        if dt != self._dt:
            self._coeffs = self.config.coefficients(dt)
            self._dt = dt
        return self._coeffs

    def reset(self, first) -> None:
        first = np.asarray(first, dtype=float)
        self.lowpass = first.copy()
        self.notch_x = np.stack([first, first])
        self.notch_y = np.stack([first, first])


def filter_imu(state: ImuFilterState, raw, dt: float) -> np.ndarray:
    """Push one ``(roll, pitch, p, q)`` sample through the cascade."""
    raw = np.asarray(raw, dtype=float)
    if state.lowpass is None:
        state.reset(raw)
    alpha, b, a = state._coefficients(dt)
    state.lowpass = state.lowpass + alpha * (raw - state.lowpass)
    x0 = state.lowpass
    x1, x2 = state.notch_x
    y1, y2 = state.notch_y
    y0 = b[0] * x0 + b[1] * x1 + b[2] * x2 - a[1] * y1 - a[2] * y2
    state.notch_x = np.stack([x0, x1])
    state.notch_y = np.stack([y0, y1])
    return y0


def filter_imu_block(config: ImuFilterConfig, samples, dt: float) -> np.ndarray:
    """Filter a whole ``(N, channels)`` stream at once (same cascade, same seeding)."""
    samples = np.asarray(samples, dtype=float)
    if len(samples) == 0:
        return samples.copy()
    alpha, b, a = config.coefficients(dt)
    lp_b, lp_a = np.array([alpha]), np.array([1.0, alpha - 1.0])
    first = samples[0]
    zi_lp = signal.lfilter_zi(lp_b, lp_a)[:, None] * first
    out, _ = signal.lfilter(lp_b, lp_a, samples, axis=0, zi=zi_lp)
    zi_notch = signal.lfilter_zi(b, a)[:, None] * first
    out, _ = signal.lfilter(b, a, out, axis=0, zi=zi_notch)
    return out


# -- fusion --------------------------------------------------------------------


def fuse(vio: OdometrySample, drift: DriftState, imu) -> FusedState:
    """Corrected state from world-frame VIO, the drift estimate and filtered IMU.

    ``vio`` must already be calibrated and expressed in the world frame;
    ``imu`` is the filtered ``(roll, pitch, p, q)``.
    """
    imu = np.asarray(imu, dtype=float)
    for arr in (vio.position, vio.orientation, vio.velocity_body, vio.rates_body, drift.x, imu):
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("non-finite input to fuse")
    yaw_vio = float(quat_to_euler(vio.orientation)[2])
    v_world = rotate_vector(vio.orientation, vio.velocity_body)
    return FusedState(
        position=np.asarray(vio.position, dtype=float) - drift.position,
        orientation=np.array([imu[0], imu[1], wrap_angle(yaw_vio - drift.yaw)]),
        velocity=v_world - drift.velocity,
        rates=np.array([imu[2], imu[3], vio.rates_body[2] - drift.yaw_rate]),
    )


def fuse_series(vio_states: np.ndarray, drift_x: np.ndarray, imu: np.ndarray) -> np.ndarray:
    """Vectorized ``fuse`` over a stream.

    ``vio_states`` holds world-frame VIO rows in ``STATE_COLUMNS`` order (world
    velocity already rotated out of the body frame), ``drift_x`` the (N, 8)
    drift means and ``imu`` the (N, 4) filtered IMU channels.
    """
    vio_states = np.asarray(vio_states, dtype=float)
    drift_x = np.asarray(drift_x, dtype=float)
    imu = np.asarray(imu, dtype=float)
    if not (np.all(np.isfinite(vio_states)) and np.all(np.isfinite(drift_x)) and np.all(np.isfinite(imu))):
        raise InvalidInputError("non-finite input to fuse")
    out = np.empty_like(vio_states)
    out[:, 0:3] = vio_states[:, 0:3] - drift_x[:, [0, 2, 4]]
    out[:, 3:5] = imu[:, 0:2]
    out[:, 5] = wrap_angle(vio_states[:, 5] - drift_x[:, 6])
    out[:, 6:9] = vio_states[:, 6:9] - drift_x[:, [1, 3, 5]]
    out[:, 9:11] = imu[:, 2:4]
    out[:, 11] = vio_states[:, 11] - drift_x[:, 7]
    return out


def vio_world_states(positions, orientations, velocity_body, rates_body) -> np.ndarray:
    """World-frame VIO rows in ``STATE_COLUMNS`` order from stacked odometry."""
    R = quat_to_rotation(orientations)
    euler = quat_to_euler(orientations)
    v_world = matvec(R, velocity_body)
    return np.hstack([np.asarray(positions, float), euler, v_world, np.asarray(rates_body, float)])
