"""Deterministic scenario engine.

Builds a constant-speed closed trajectory through the gate centers, synthesizes
a drifting VIO stream, an IMU attitude/rate stream and delayed landmark fixes,
then runs the estimator over them.

The vehicle is flown heading-aligned and level (roll = pitch = 0); flight
dynamics are out of scope, so the attitude carries no thrust-induced tilt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .drift_estimator import GatingPolicy, MeasurementNoiseParams
from .drift_model import DriftModelParams
from .errors import ConfigurationError
from .geometry import (
    Pose,
    StaticTransform,
    compose_orientation,
    invert_orientation,
    quat_from_euler,
    rotate_vector,
    transform_arrays,
)
from .landmark_model import DetectorNoiseModel, Gate, LandmarkMeasurement, load_track, synth_measurement
from .pipeline import EstimatorOutput, EstimatorParams, ImuStream, VioStream, run_estimator
from .state_fusion import ImuFilterConfig

MAX_SPEED = 13.0

# A seven-gate loop, roughly 60 m x 40 m, flown counter-clockwise.
DEFAULT_TRACK = (
    Gate((0.0, 0.0, 2.0), 0.0),
    Gate((20.0, -4.0, 2.5), 0.0),
    Gate((40.0, 2.0, 3.0), 0.8),
    Gate((42.0, 22.0, 2.5), 2.0),
    Gate((24.0, 34.0, 2.0), 3.0),
    Gate((4.0, 30.0, 3.0), -2.6),
    Gate((-10.0, 14.0, 2.5), -1.4),
)


@dataclass(frozen=True)
class VioDriftSynthesis:
    """How the synthetic VIO deviates from ground truth.

    Intensities are random-walk strengths of the drift velocities (m/s per
    sqrt(s)) and of the yaw drift rate (rad/s per sqrt(s)). The frame fields
    place the raw odometry frame relative to the calibrated one; calibration
    removes them again.
    """

    drift_velocity_intensity: float = 0.05
    yaw_rate_intensity: float = 0.01
    velocity_noise: float = 0.05
    attitude_noise: float = 0.05
    rate_noise: float = 0.3
    frame_offset_x: float = 0.4
    frame_offset_y: float = -0.3
    frame_offset_z: float = 0.1
    frame_tilt_roll: float = 0.03
    frame_tilt_pitch: float = -0.02
    frame_tilt_yaw: float = 0.2

    def __post_init__(self):
        for name in ("drift_velocity_intensity", "yaw_rate_intensity", "velocity_noise",
                     "attitude_noise", "rate_noise"):
            if not getattr(self, name) >= 0:
                raise ConfigurationError(f"vio {name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class ImuNoise:
    attitude: float = 0.01
    rate: float = 0.05

    def __post_init__(self):
        if not (self.attitude >= 0 and self.rate >= 0):
            raise ConfigurationError("imu noise stddevs must be >= 0")


@dataclass(frozen=True)
class Rates:
    vio: float = 100.0
    imu: float = 400.0

    def __post_init__(self):
        if not (self.vio > 0 and self.imu > 0):
            raise ConfigurationError("stream rates must be > 0")


@dataclass(frozen=True)
class EstimatorSettings:
    initial_variance: float = 1e-4


@dataclass(frozen=True)
class InitPose:
    """Known world pose at odometry start; builds the odometry->world transform.

    Left unset (all NaN) in simulation configs, where the first ground-truth
    pose is used.
    """

    x: float = math.nan
    y: float = math.nan
    z: float = math.nan
    roll: float = math.nan
    pitch: float = math.nan
    yaw: float = math.nan

    @property
    def is_set(self) -> bool:
        return all(math.isfinite(v) for v in (self.x, self.y, self.z, self.roll, self.pitch, self.yaw))

    def transform(self) -> StaticTransform:
        return StaticTransform((self.x, self.y, self.z), quat_from_euler(self.roll, self.pitch, self.yaw))


@dataclass(frozen=True)
class ScenarioConfig:
    track: str = ""
    speed: float = 8.0
    laps: int = 0
    duration: float = 60.0
    seed: int = 0
    rates: Rates = field(default_factory=Rates)
    detector: DetectorNoiseModel = field(default_factory=DetectorNoiseModel)
    vio: VioDriftSynthesis = field(default_factory=VioDriftSynthesis)
    imu_noise: ImuNoise = field(default_factory=ImuNoise)
    drift: DriftModelParams = field(default_factory=DriftModelParams)
    noise: MeasurementNoiseParams = field(default_factory=MeasurementNoiseParams)
    gating: GatingPolicy = field(default_factory=GatingPolicy)
    imu_filter: ImuFilterConfig = field(default_factory=ImuFilterConfig)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    init: InitPose = field(default_factory=InitPose)

    def __post_init__(self):
        if not 0 < self.speed <= MAX_SPEED:
            raise ConfigurationError(f"speed must lie in (0, {MAX_SPEED}] m/s, got {self.speed}")
        if self.laps < 0:
            raise ConfigurationError(f"laps must be >= 0, got {self.laps}")
        if self.laps == 0 and not self.duration > 0:
            raise ConfigurationError(f"duration must be > 0, got {self.duration}")
        if abs(self.drift.dt - 1.0 / self.rates.vio) > 1e-12:
            raise ConfigurationError(
                f"drift model dt {self.drift.dt} does not match the odometry rate {self.rates.vio} Hz"
            )

    def gates(self) -> list[Gate]:
        return load_track(self.track) if self.track else list(DEFAULT_TRACK)

    def estimator_params(self) -> EstimatorParams:
        return EstimatorParams(
            model=self.drift,
            noise=self.noise,
            gating=self.gating,
            imu_filter=self.imu_filter,
            imu_rate=self.rates.imu,
            initial_variance=self.estimator.initial_variance,
        )


# -- ground truth ----------------------------------------------------------------


@dataclass
class GroundTruth:
    t: np.ndarray
    position: np.ndarray  # (N, 3) world
    euler: np.ndarray  # (N, 3) roll, pitch, yaw
    velocity: np.ndarray  # (N, 3) world
    rates: np.ndarray  # (N, 3) body

    @property
    def orientation(self) -> np.ndarray:
        return quat_from_euler(self.euler[:, 0], self.euler[:, 1], self.euler[:, 2])

    def states(self) -> np.ndarray:
        return np.hstack([self.position, self.euler, self.velocity, self.rates])

    def pose(self, i: int) -> Pose:
        return Pose.from_euler(self.position[i], *self.euler[i])


class Trajectory:
    """Closed cubic spline through gate centers, re-timed to constant speed."""

    def __init__(self, gates, speed: float, knots_per_meter: float = 2.0):
        if len(gates) < 2:
            raise ConfigurationError("a track needs at least two gates")
        if not 0 < speed <= MAX_SPEED:
            raise ConfigurationError(f"speed must lie in (0, {MAX_SPEED}] m/s, got {speed}")
        pts = np.array([g.center for g in gates], dtype=float)
        closed = np.vstack([pts, pts[:1]])
        chords = np.linalg.norm(np.diff(closed, axis=0), axis=1)
        if np.any(chords < 1e-6):
            raise ConfigurationError("track has coincident consecutive gates")
        u = np.concatenate([[0.0], np.cumsum(chords)])
        geometric = CubicSpline(u, closed, bc_type="periodic")

        # arc length of the chord-parameterized spline on a fine grid
        u_fine = np.linspace(0.0, u[-1], int(200 * len(gates) + 50 * u[-1]) + 1)
        ds = np.linalg.norm(geometric(u_fine, 1), axis=1)
        s = np.concatenate([[0.0], np.cumsum(0.5 * (ds[1:] + ds[:-1]) * np.diff(u_fine))])
        self.length = float(s[-1])
        self.speed = float(speed)
        self.period = self.length / self.speed

        # re-time: knots equally spaced in arc length, time = arc length / speed
        m = max(8 * len(gates), int(math.ceil(knots_per_meter * self.length)))
        s_knots = np.linspace(0.0, self.length, m + 1)
        u_knots = np.interp(s_knots, s, u_fine)
        p_knots = geometric(u_knots)
        p_knots[-1] = p_knots[0]
        self._spline = CubicSpline(s_knots / self.speed, p_knots, bc_type="periodic")

    def sample(self, t) -> GroundTruth:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tau = np.mod(t, self.period)
        pos = self._spline(tau)
        vel = self._spline(tau, 1)
        acc = self._spline(tau, 2)
        yaw = np.arctan2(vel[:, 1], vel[:, 0])
        h2 = vel[:, 0] ** 2 + vel[:, 1] ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            yaw_rate = np.where(h2 > 1e-9, (vel[:, 0] * acc[:, 1] - vel[:, 1] * acc[:, 0]) / h2, 0.0)
        zeros = np.zeros_like(yaw)
        return GroundTruth(
            t=t,
            position=pos,
            euler=np.stack([zeros, zeros, yaw], axis=1),
            velocity=vel,
            rates=np.stack([zeros, zeros, yaw_rate], axis=1),
        )


def generate_trajectory(track, speed: float, rate: float, duration: float | None = None) -> GroundTruth:
    """Ground truth sampled at ``rate`` for ``duration`` seconds (one lap by default)."""
    traj = Trajectory(track, speed)
    if duration is None:
        duration = traj.period
    return traj.sample(tick_times(duration, rate))


def tick_times(duration: float, rate: float) -> np.ndarray:
    """``0, 1/rate, 2/rate, ...`` up to and including ``duration``; computed as ``k / rate``."""
    n = int(math.floor(duration * rate + 1e-9)) + 1
    return np.arange(n) / rate


# -- synthetic sensors -------------------------------------------------------------


@dataclass
class VioTruthDrift:
    """The drift actually injected into a synthetic VIO stream (world frame)."""

    position: np.ndarray
    velocity: np.ndarray
    yaw: np.ndarray
    yaw_rate: np.ndarray


def synth_vio(gt: GroundTruth, params: VioDriftSynthesis, rng: np.random.Generator,
              init_transform: StaticTransform | None = None) -> tuple[VioStream, VioTruthDrift]:
    """Drifting odometry in the raw (pre-calibration) VIO frame.

    Drift velocities and the yaw drift rate are random walks; positions and yaw
    integrate them. The first sample is the calibration instant and carries no
    attitude noise.
    """
    n = len(gt.t)
    dt = np.diff(gt.t, prepend=gt.t[0])
    sq = np.sqrt(dt)[:, None]

    dv = params.drift_velocity_intensity * sq * rng.standard_normal((n, 3))
    dv[0] = 0.0
    v_d = np.cumsum(dv, axis=0)
    p_d = np.vstack([np.zeros(3), np.cumsum(v_d[:-1] * dt[1:, None], axis=0)])
    dr = params.yaw_rate_intensity * sq[:, 0] * rng.standard_normal(n)
    dr[0] = 0.0
    r_d = np.cumsum(dr)
    yaw_d = np.concatenate([[0.0], np.cumsum(r_d[:-1] * dt[1:])])

    att_noise = params.attitude_noise * rng.standard_normal((n, 2))
    att_noise[0] = 0.0
    vel_noise = params.velocity_noise * rng.standard_normal((n, 3))
    rate_noise = params.rate_noise * rng.standard_normal((n, 3))

    pos_w = gt.position + p_d
    q_w = quat_from_euler(
        gt.euler[:, 0] + att_noise[:, 0],
        gt.euler[:, 1] + att_noise[:, 1],
        gt.euler[:, 2] + yaw_d,
    )
    v_world = gt.velocity + v_d
    v_body = rotate_vector(invert_orientation(q_w), v_world) + vel_noise
    rates = gt.rates + np.column_stack([np.zeros(n), np.zeros(n), r_d]) + rate_noise

    # world -> calibrated odometry frame -> raw frame
    if init_transform is None:
        init_transform = StaticTransform.from_pose(gt.pose(0))
    pos_cal, q_cal = transform_arrays(init_transform.inverse(), pos_w, q_w)
    offset = np.array([params.frame_offset_x, params.frame_offset_y, params.frame_offset_z])
    tilt = quat_from_euler(params.frame_tilt_roll, params.frame_tilt_pitch, params.frame_tilt_yaw)
    stream = VioStream(
        t=gt.t.copy(),
        position=pos_cal + offset,
        orientation=compose_orientation(tilt, q_cal),
        velocity_body=v_body,
        rates_body=rates,
    )
    return stream, VioTruthDrift(p_d, v_d, yaw_d, r_d)


def synth_imu(gt: GroundTruth, noise: ImuNoise, rng: np.random.Generator) -> ImuStream:
    n = len(gt.t)
    clean = np.column_stack([gt.euler[:, 0], gt.euler[:, 1], gt.rates[:, 0], gt.rates[:, 1]])
    sigmas = np.array([noise.attitude, noise.attitude, noise.rate, noise.rate])
    return ImuStream(gt.t.copy(), clean + sigmas * rng.standard_normal((n, 4)))


def synth_detector(traj: Trajectory, gates, model: DetectorNoiseModel, duration: float,
                   rng: np.random.Generator) -> list[LandmarkMeasurement]:
    times = tick_times(duration, model.rate)
    gt = traj.sample(times)
    out = []
    for i, t in enumerate(times):
        meas = synth_measurement(gt.pose(i), float(t), gates, model, rng)
        if meas is not None:
            out.append(meas)
    return out


# -- scenario ----------------------------------------------------------------------


@dataclass
class RunLog:
    t: np.ndarray
    gt: np.ndarray  # (N, 12)
    vio: np.ndarray  # (N, 12) world-frame VIO
    fused: np.ndarray  # (N, 12)
    drift: np.ndarray  # (N, 8)
    measurements: list[LandmarkMeasurement]
    estimate: EstimatorOutput
    raw_vio: VioStream
    imu: ImuStream
    true_drift: VioTruthDrift
    init_pose: InitPose
    config: ScenarioConfig

    def checksum(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for arr in (self.t, self.gt, self.vio, self.fused, self.drift):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def scenario_duration(config: ScenarioConfig, traj: Trajectory) -> float:
    return config.laps * traj.period if config.laps > 0 else config.duration


def run_scenario(config: ScenarioConfig, rng_seed=None) -> RunLog:
    """Run one scenario. ``rng_seed`` overrides ``config.seed`` (any SeedSequence entropy)."""
    gates = config.gates()
    traj = Trajectory(gates, config.speed)
    duration = scenario_duration(config, traj)
    seed = config.seed if rng_seed is None else rng_seed
    rng_vio, rng_imu, rng_det = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))

    gt = traj.sample(tick_times(duration, config.rates.vio))
    init_pose = config.init
    if not init_pose.is_set:
        init_pose = InitPose(*(float(v) for v in (*gt.position[0], *gt.euler[0])))
    T_init = init_pose.transform()

    raw_vio, true_drift = synth_vio(gt, config.vio, rng_vio, T_init)
    imu = synth_imu(traj.sample(tick_times(duration, config.rates.imu)), config.imu_noise, rng_imu)
    measurements = synth_detector(traj, gates, config.detector, duration, rng_det)

    out = run_estimator(raw_vio, imu, measurements, config.estimator_params(), T_init)
    return RunLog(
        t=out.t,
        gt=gt.states(),
        vio=out.vio,
        fused=out.fused,
        drift=out.drift,
        measurements=measurements,
        estimate=out,
        raw_vio=raw_vio,
        imu=imu,
        true_drift=true_drift,
        init_pose=init_pose,
        config=config,
    )
