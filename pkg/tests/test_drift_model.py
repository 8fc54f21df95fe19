import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from oracles import dense_process_noise, dense_transition
from viodrift.drift_model import (
    DriftModelParams,
    DriftState,
    build_process_noise,
    build_transition,
    propagate,
)
from viodrift.errors import ConfigurationError

frictions = st.floats(0.0, 0.99)


def test_zero_friction_blocks():
    A = build_transition(DriftModelParams(dt=0.01, friction_x=0, friction_y=0, friction_z=0, friction_yaw=0))
    for i in (0, 2, 4, 6):
        assert np.array_equal(A[i:i + 2, i:i + 2], [[1.0, 0.01], [0.0, 1.0]])


@given(st.floats(1e-4, 1.0), frictions, frictions, frictions, frictions)
def test_transition_layout(dt, fx, fy, fz, fyaw):
    A = build_transition(DriftModelParams(dt=dt, friction_x=fx, friction_y=fy, friction_z=fz, friction_yaw=fyaw))
    assert A[0, 1] == dt and A[1, 1] == 1 - fx
    assert np.array_equal(A, dense_transition(dt, (fx, fy, fz, fyaw)))
    mask = np.zeros((8, 8), bool)
    for i in (0, 2, 4, 6):
        mask[i:i + 2, i:i + 2] = True
    assert np.all(A[~mask] == 0.0)


@pytest.mark.parametrize("kwargs", [
    {"dt": 1.0, "friction_x": 1.0},
    {"friction_yaw": -0.1},
    {"dt": 0.0},
    {"q_vx": -1e-6},
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        DriftModelParams(**kwargs)


def test_process_noise_placement():
    zero = DriftModelParams(q_x=0, q_y=0, q_z=0, q_yaw=0, q_vx=0, q_vy=0, q_vz=0, q_r=0)
    assert np.array_equal(build_process_noise(zero), np.zeros((8, 8)))
    Q = build_process_noise(DriftModelParams(q_x=4.0))
    assert Q[0, 0] == 4.0
    assert np.all(Q[~np.eye(8, dtype=bool)] == 0)


def test_process_noise_order():
    # listing order: x, y, z, yaw, then vx, vy, vz, r
    values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
    p = DriftModelParams(q_x=1, q_y=2, q_z=3, q_yaw=4, q_vx=5, q_vy=6, q_vz=7, q_r=8)
    assert np.array_equal(build_process_noise(p), dense_process_noise(values[:4], values[4:]))
    assert list(np.diag(build_process_noise(p))) == [1, 5, 2, 6, 3, 7, 4, 8]


def test_propagate_examples():
    A = build_transition(DriftModelParams(friction_x=0.0))
    assert np.array_equal(propagate(DriftState(), A).x, np.zeros(8))
    x = np.zeros(8)
    x[1] = 1.0
    out = propagate(DriftState(x), A).x
    assert out[0] == pytest.approx(0.01) and out[1] == 1.0 and np.all(out[2:] == 0)

    A = build_transition(DriftModelParams(friction_x=0.1))
    assert propagate(DriftState(x), A).x[1] == pytest.approx(0.9, abs=1e-15)


def test_propagate_wraps_yaw():
    x = np.zeros(8)
    x[6], x[7] = math.pi - 0.001, 1.0
    out = propagate(DriftState(x), build_transition(DriftModelParams(friction_yaw=0.0)))
    assert out.x[6] == pytest.approx(-math.pi + 0.009)


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.integers(1, 300))
def test_double_integrator_identity(p0, v0, k):
    params = DriftModelParams(friction_x=0, friction_y=0, friction_z=0, friction_yaw=0)
    A = build_transition(params)
    x = np.zeros(8)
    x[[0, 2, 4]], x[[1, 3, 5]] = p0, v0
    s = DriftState(x)
    for _ in range(k):
        s = propagate(s, A)
    expected = np.array(p0) + k * params.dt * np.array(v0)
    assert np.allclose(s.position, expected, atol=1e-12 * k * (1 + max(map(abs, p0 + v0))))
    assert np.array_equal(s.velocity, v0)


@pytest.mark.parametrize("f", [0.01, 0.1, 0.37])
def test_friction_decay_is_geometric(f):
    A = build_transition(DriftModelParams(friction_x=f, friction_y=f, friction_z=f, friction_yaw=f))
    x = np.array([0, 1.0, 0, -2.0, 0, 0.5, 0, 0.3])
    s = DriftState(x)
    ratio = 1 - sympy.Rational(str(f))
    for k in range(1, 101):
        s = propagate(s, A)
        exact = float(ratio ** k)
        assert np.allclose(s.x[[1, 3, 5, 7]], x[[1, 3, 5, 7]] * exact, rtol=1e-12, atol=0)
