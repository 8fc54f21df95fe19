"""Synthetic gate-based landmark detector.

Stands in for the image pipeline: decides which gate corners the camera sees,
derives a reprojection error from range, converts it to a confidence score and
emits a noisy world-frame ``(x, y, z, yaw)`` fix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .geometry import Pose, quat_to_rotation, wrap_angle

CONFIDENCE_SIGMA = 0.15
CONFIDENCE_BETA = 0.4


@dataclass(frozen=True)
class Gate:
    center: tuple[float, float, float]
    yaw: float = 0.0
    inner_size: float = 1.5
    outer_size: float = 2.7

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not 0 < self.inner_size < self.outer_size:
            raise ConfigurationError(
                f"gate inner size {self.inner_size} must be positive and below outer size {self.outer_size}"
            )

    def corners(self) -> np.ndarray:
        """World positions of the four inner-opening corners, shape (4, 3)."""
        h = self.inner_size / 2
        local = np.array([[0.0, -h, -h], [0.0, h, -h], [0.0, h, h], [0.0, -h, h]])
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        Rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return local @ Rz.T + np.asarray(self.center, dtype=float)


@dataclass(frozen=True)
class LandmarkMeasurement:
    """World-frame ``(x, y, z, yaw)`` fix stamped at image capture time."""

    timestamp: float
    pose: tuple[float, float, float, float]
    confidence: float
    delivery_time: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInputError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class DetectorNoiseModel:
    sigma_p: float = 0.01
    sigma_yaw: float = 0.01
    delay: float = 0.0
    rate: float = 30.0
    visibility_range: float = 25.0
    fov_half_angle: float = math.pi / 2
    reproj_base: float = 0.02
    reproj_per_meter: float = 0.01

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigurationError(f"detector rate must be > 0, got {self.rate}")
        for name in ("sigma_p", "sigma_yaw", "delay", "visibility_range", "fov_half_angle",
                     "reproj_base", "reproj_per_meter"):
            if not getattr(self, name) >= 0:
                raise ConfigurationError(f"detector {name} must be >= 0, got {getattr(self, name)}")


class Visibility(NamedTuple):
    n_corners: int
    gate_index: int | None
    distance: float


def reprojection_confidence(e_r: float, n_corners: int,
                            sigma: float = CONFIDENCE_SIGMA, beta: float = CONFIDENCE_BETA) -> float:
    """Gaussian-weighted reprojection error times a corner-count saturation term."""
    if e_r < 0 or n_corners < 0:
        raise InvalidInputError(f"reprojection error and corner count must be >= 0, got {e_r}, {n_corners}")
    return math.exp(-e_r * e_r / (2 * sigma * sigma)) * (1.0 - math.exp(-beta * n_corners))


def visible_corners(vehicle_pose: Pose, gates: Sequence[Gate], model: DetectorNoiseModel) -> Visibility:
    """Corner count of the nearest gate with at least one corner in view.

    The camera looks along body +x; a corner is in view when it lies in front of
    the vehicle, within ``fov_half_angle`` in azimuth and within range.
    """
    if not gates:
        return Visibility(0, None, math.inf)
    R = quat_to_rotation(vehicle_pose.orientation)
    corners, centers = _gate_arrays(tuple(gates))
    d_body = (corners - vehicle_pose.position) @ R
    dist = np.linalg.norm(d_body, axis=2)
    azimuth = np.abs(np.arctan2(d_body[..., 1], d_body[..., 0]))
    seen = (d_body[..., 0] > 0) & (azimuth <= model.fov_half_angle) & (dist <= model.visibility_range)
    counts = np.count_nonzero(seen, axis=1)
    if not counts.any():
        return Visibility(0, None, math.inf)
    center_dist = np.linalg.norm(centers - vehicle_pose.position, axis=1)
    center_dist = np.where(counts > 0, center_dist, np.inf)
    i = int(np.argmin(center_dist))
    return Visibility(int(counts[i]), i, float(center_dist[i]))


_GATE_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _gate_arrays(gates: tuple[Gate, ...]) -> tuple[np.ndarray, np.ndarray]:
    cached = _GATE_CACHE.get(gates)
    if cached is None:
        corners = np.stack([g.corners() for g in gates])
        centers = np.array([g.center for g in gates], dtype=float)
        cached = _GATE_CACHE[gates] = (corners, centers)
        if len(_GATE_CACHE) > 64:
            _GATE_CACHE.pop(next(iter(_GATE_CACHE)))
    return cached


def synth_measurement(gt_pose: Pose, t: float, gates: Sequence[Gate], model: DetectorNoiseModel,
                      rng: np.random.Generator) -> LandmarkMeasurement | None:
    vis = visible_corners(gt_pose, gates, model)
    if vis.n_corners == 0:
        return None
    e_r = model.reproj_base + model.reproj_per_meter * vis.distance
    confidence = reprojection_confidence(e_r, vis.n_corners)
    noise = rng.standard_normal(4)
    yaw = float(gt_pose.euler[2])
    pose = (
        float(gt_pose.position[0] + model.sigma_p * noise[0]),
        float(gt_pose.position[1] + model.sigma_p * noise[1]),
        float(gt_pose.position[2] + model.sigma_p * noise[2]),
        wrap_angle(yaw + model.sigma_yaw * float(noise[3])),
    )
    return LandmarkMeasurement(float(t), pose, confidence, float(t) + model.delay)


def parse_track(text: str) -> list[Gate]:
    gates = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ConfigurationError(f"track line {lineno}: expected 'x y z yaw inner outer', got {raw!r}")
        try:
            x, y, z, yaw, inner, outer = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigurationError(f"track line {lineno}: {exc}") from exc
        gates.append(Gate((x, y, z), yaw, inner, outer))
    return gates


def load_track(path: str | Path) -> list[Gate]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read track file {path}: {exc.strerror}", key="track") from None
    return parse_track(text)


def format_track(gates: Sequence[Gate]) -> str:
    lines = ["# x y z yaw inner outer"]
    for g in gates:
        lines.append(" ".join(repr(float(v)) for v in (*g.center, g.yaw, g.inner_size, g.outer_size)))
    return "\n".join(lines) + "\n"
