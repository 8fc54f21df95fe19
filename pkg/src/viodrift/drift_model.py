"""Friction-damped linear drift model.

State layout (8 entries)::

    0 x_d   1 vx_d   2 y_d   3 vy_d   4 z_d   5 vz_d   6 yaw_d   7 r_d

Each axis is a double integrator whose velocity term is damped by ``1 - f`` per
step. Frictions are per-step quantities at the prediction rate; for small ``f``
the equivalent continuous decay rate is roughly ``f / dt`` per second.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .geometry import wrap_angle

STATE_DIM = 8
POSITION_IDX = (0, 2, 4)
VELOCITY_IDX = (1, 3, 5)
YAW_IDX = 6
YAW_RATE_IDX = 7
MEASURED_IDX = (0, 2, 4, 6)


@dataclass(frozen=True)
class DriftModelParams:
    dt: float = 0.01
    friction_x: float = 0.01
    friction_y: float = 0.01
    friction_z: float = 0.01
    friction_yaw: float = 0.01
    # process variances, per step, in squared state units
    q_x: float = 1e-6
    q_y: float = 1e-6
    q_z: float = 1e-6
    q_yaw: float = 1e-6
    q_vx: float = 1e-4
    q_vy: float = 1e-4
    q_vz: float = 1e-4
    q_r: float = 1e-4

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        for name in ("friction_x", "friction_y", "friction_z", "friction_yaw"):
            f = getattr(self, name)
            if not 0.0 <= f < 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1), got {f}")
        for name in ("q_x", "q_y", "q_z", "q_yaw", "q_vx", "q_vy", "q_vz", "q_r"):
            if not getattr(self, name) >= 0.0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")


def build_transition(params: DriftModelParams) -> np.ndarray:
    A = np.zeros((STATE_DIM, STATE_DIM))
    frictions = (params.friction_x, params.friction_y, params.friction_z, params.friction_yaw)
    for axis, f in enumerate(frictions):
        i = 2 * axis
        A[i, i] = 1.0
        A[i, i + 1] = params.dt
        A[i + 1, i + 1] = 1.0 - f
    return A


def build_process_noise(params: DriftModelParams) -> np.ndarray:
    """Diagonal Q in state order.

    The parameter listing groups the position/yaw variances first and the rate
    variances second; they are interleaved here to match the state layout.
    """
    diag = np.empty(STATE_DIM)
    diag[[0, 2, 4, 6]] = (params.q_x, params.q_y, params.q_z, params.q_yaw)
    diag[[1, 3, 5, 7]] = (params.q_vx, params.q_vy, params.q_vz, params.q_r)
    return np.diag(diag)


@dataclass
class DriftState:
    """Drift mean ``x`` (8,) and covariance ``P`` (8, 8)."""

    x: np.ndarray = field(default_factory=lambda: np.zeros(STATE_DIM))
    P: np.ndarray = field(default_factory=lambda: np.eye(STATE_DIM) * 1e-4)

    def copy(self) -> "DriftState":
        return DriftState(self.x.copy(), self.P.copy())

    @property
    def position(self) -> np.ndarray:
        return self.x[list(POSITION_IDX)]

    @property
    def velocity(self) -> np.ndarray:
        return self.x[list(VELOCITY_IDX)]

    @property
    def yaw(self) -> float:
        return float(self.x[YAW_IDX])

    @property
    def yaw_rate(self) -> float:
        return float(self.x[YAW_RATE_IDX])


def propagate(state: DriftState, A: np.ndarray) -> DriftState:
    """Mean-only propagation; the covariance is carried over untouched."""
    x = A @ state.x
    x[YAW_IDX] = wrap_angle(x[YAW_IDX])
    return DriftState(x, state.P.copy())
