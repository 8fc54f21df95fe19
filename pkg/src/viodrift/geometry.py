"""Frames, rotations and attitude helpers.

Conventions used throughout the package:

* quaternions are Hamilton, scalar-first ``[w, x, y, z]``;
* ``q`` describes the rotation body -> parent frame, so ``R(q) @ v_body = v_parent``;
* Euler angles are intrinsic Z-Y-X (yaw, then pitch, then roll), i.e.
  ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.

Most functions broadcast over leading axes so the simulator can convert whole
streams at once; the scalar cases are just arrays of shape ``(4,)`` / ``(3,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAttitudeError, InvalidInputError

TWO_PI = 2.0 * math.pi
GIMBAL_MARGIN = 1e-6
IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def wrap_angle(theta):
    """Wrap an angle (or array of angles) into ``(-pi, pi]``."""
    if isinstance(theta, float):
        if not math.isfinite(theta):
            raise InvalidInputError(f"non-finite angle: {theta!r}")
        wrapped = theta - TWO_PI * math.ceil((theta - math.pi) / TWO_PI)
        return wrapped + TWO_PI if wrapped <= -math.pi else wrapped
    theta_arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta_arr)):
        raise InvalidInputError(f"non-finite angle: {theta!r}")
    wrapped = theta_arr - TWO_PI * np.ceil((theta_arr - math.pi) / TWO_PI)
    # ceil() can land one period low for values a hair above an odd multiple of pi
    wrapped = np.where(wrapped <= -math.pi, wrapped + TWO_PI, wrapped)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def _check_finite(*values) -> None:
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("non-finite input")


def euler_to_rotation(roll, pitch, yaw) -> np.ndarray:
    """Rotation matrix ``Rz(yaw) Ry(pitch) Rx(roll)``; broadcasts over inputs."""
    roll, pitch, yaw = np.broadcast_arrays(
        np.asarray(roll, float), np.asarray(pitch, float), np.asarray(yaw, float)
    )
    _check_finite(roll, pitch, yaw)
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    R = np.empty(roll.shape + (3, 3))
    R[..., 0, 0] = cy * cp
    R[..., 0, 1] = cy * sp * sr - sy * cr
    R[..., 0, 2] = cy * sp * cr + sy * sr
    R[..., 1, 0] = sy * cp
    R[..., 1, 1] = sy * sp * sr + cy * cr
    R[..., 1, 2] = sy * sp * cr - cy * sr
    R[..., 2, 0] = -sp
    R[..., 2, 1] = cp * sr
    R[..., 2, 2] = cp * cr
    return R


def euler_from_rotation(R) -> np.ndarray:
    """Return ``(roll, pitch, yaw)`` of a rotation matrix (stacked on the last axis).

    Raises DegenerateAttitudeError within ``GIMBAL_MARGIN`` of pitch = +-pi/2.
    """
    R = np.asarray(R, dtype=float)
    _check_finite(R)
    sin_pitch = np.clip(-R[..., 2, 0], -1.0, 1.0)
    pitch = np.arcsin(sin_pitch)
    if np.any(np.abs(np.abs(pitch) - math.pi / 2) < GIMBAL_MARGIN):
        raise DegenerateAttitudeError("pitch at the +-90 deg singularity")
    roll = np.arctan2(R[..., 2, 1], R[..., 2, 2])
    yaw = np.arctan2(R[..., 1, 0], R[..., 0, 0])
    return np.stack([roll, pitch, yaw], axis=-1)


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    _check_finite(q)
    # explicit sums: reductions may vectorize differently with memory layout,
    # and replayed logs must reproduce in-process results bit for bit
    n = np.sqrt(q[..., 0:1] ** 2 + q[..., 1:2] ** 2 + q[..., 2:3] ** 2 + q[..., 3:4] ** 2)
    if np.any(n < 1e-12):
        raise InvalidInputError("zero-norm quaternion")
    return q / n


def compose_orientation(a, b) -> np.ndarray:
    """Hamilton product ``a (x) b``, renormalized."""
    a = quat_normalize(a)
    b = quat_normalize(b)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    out = np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )
    return quat_normalize(out)


def invert_orientation(q) -> np.ndarray:
    q = quat_normalize(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_to_rotation(q) -> np.ndarray:
    q = quat_normalize(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - w * z)
    R[..., 0, 2] = 2 * (x * z + w * y)
    R[..., 1, 0] = 2 * (x * y + w * z)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - w * x)
    R[..., 2, 0] = 2 * (x * z - w * y)
    R[..., 2, 1] = 2 * (y * z + w * x)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def quat_from_euler(roll, pitch, yaw) -> np.ndarray:
    roll, pitch, yaw = np.broadcast_arrays(
        np.asarray(roll, float), np.asarray(pitch, float), np.asarray(yaw, float)
    )
    _check_finite(roll, pitch, yaw)
    cr, sr = np.cos(roll / 2), np.sin(roll / 2)
    cp, sp = np.cos(pitch / 2), np.sin(pitch / 2)
    cy, sy = np.cos(yaw / 2), np.sin(yaw / 2)
    q = np.stack(
        [
            cy * cp * cr + sy * sp * sr,
            cy * cp * sr - sy * sp * cr,
            cy * sp * cr + sy * cp * sr,
            sy * cp * cr - cy * sp * sr,
        ],
        axis=-1,
    )
    return q


def quat_to_euler(q) -> np.ndarray:
    return euler_from_rotation(quat_to_rotation(q))


def rotate_vector(q, v) -> np.ndarray:
    """Rotate ``v`` from the body frame of ``q`` into its parent frame."""
    return matvec(quat_to_rotation(q), v)


def matvec(R, v) -> np.ndarray:
    """``R @ v`` over leading batch axes, summed in a fixed order."""
    R = np.asarray(R, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.stack(
        [R[..., i, 0] * v[..., 0] + R[..., i, 1] * v[..., 1] + R[..., i, 2] * v[..., 2] for i in range(3)],
        axis=-1,
    )


@dataclass(frozen=True)
class Pose:
    """Position in meters plus scalar-first unit quaternion (body -> frame)."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "orientation", quat_normalize(np.asarray(self.orientation).reshape(4)))

    @classmethod
    def from_euler(cls, position, roll: float, pitch: float, yaw: float) -> "Pose":
        return cls(np.asarray(position, dtype=float), quat_from_euler(roll, pitch, yaw))

    @property
    def euler(self) -> np.ndarray:
        return quat_to_euler(self.orientation)

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_rotation(self.orientation)


@dataclass(frozen=True)
class StaticTransform:
    """Rigid transform taking poses from a source frame into a target frame."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())

    def __post_init__(self):
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", quat_normalize(np.asarray(self.rotation).reshape(4)))

    @classmethod
    def from_pose(cls, pose: Pose) -> "StaticTransform":
        """Transform placing a frame's origin at ``pose`` (e.g. the known start pose)."""
        return cls(pose.position, pose.orientation)

    def inverse(self) -> "StaticTransform":
        q_inv = invert_orientation(self.rotation)
        return StaticTransform(-rotate_vector(q_inv, self.translation), q_inv)


def apply_static_transform(T: StaticTransform, pose: Pose) -> Pose:
    position, orientation = transform_arrays(T, pose.position, pose.orientation)
    return Pose(position, orientation)


def transform_arrays(T: StaticTransform, positions, orientations):
    """Array form of ``apply_static_transform`` for stacked positions/quaternions."""
    positions = np.asarray(positions, dtype=float)
    R = quat_to_rotation(T.rotation)
    new_positions = matvec(R, positions) + T.translation
    new_orientations = compose_orientation(T.rotation, orientations)
    return new_positions, new_orientations
