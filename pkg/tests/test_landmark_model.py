import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from viodrift.errors import ConfigurationError, InvalidInputError
from viodrift.geometry import Pose
from viodrift.landmark_model import (
    DetectorNoiseModel,
    Gate,
    LandmarkMeasurement,
    format_track,
    load_track,
    parse_track,
    reprojection_confidence,
    synth_measurement,
    visible_corners,
)

AHEAD = [Gate((5.0, 0.0, 2.0), 0.0)]
AT_ORIGIN = Pose.from_euler([0.0, 0.0, 2.0], 0, 0, 0)


def direct_confidence(e, n):
    # written out from the formula with sigma = 0.15, beta = 0.4
    return math.exp(-(e ** 2) / (2 * 0.15 ** 2)) * (1 - math.exp(-0.4 * n))


def test_confidence_examples():
    assert reprojection_confidence(0.0, 0) == 0.0
    assert reprojection_confidence(0.0, 4) == pytest.approx(1 - math.exp(-1.6), abs=1e-15)
    assert reprojection_confidence(0.0, 4) == pytest.approx(0.79810, abs=1e-4)
    assert reprojection_confidence(0.15, 4) == pytest.approx(math.exp(-0.5) * (1 - math.exp(-1.6)), abs=1e-15)
    assert reprojection_confidence(0.15, 4) == pytest.approx(0.48401, abs=1e-4)


def test_confidence_rejects_negative():
    with pytest.raises(InvalidInputError):
        reprojection_confidence(-0.1, 4)
    with pytest.raises(InvalidInputError):
        reprojection_confidence(0.1, -1)


@given(st.floats(0, 10), st.integers(0, 50))
def test_confidence_bounds_and_monotonicity(e, n):
    c = reprojection_confidence(e, n)
    assert c == pytest.approx(direct_confidence(e, n), abs=1e-15)
    assert 0.0 <= c < 1.0
    if e < 5:
        assert reprojection_confidence(e, n + 1) > c
    assert reprojection_confidence(e + 0.01, n) <= c


def test_visibility_examples():
    model = DetectorNoiseModel(visibility_range=20.0)
    vis = visible_corners(AT_ORIGIN, AHEAD, model)
    assert vis.n_corners == 4 and vis.gate_index == 0 and vis.distance == pytest.approx(5.0)

    facing_away = Pose.from_euler([0.0, 0.0, 2.0], 0, 0, math.pi)
    assert visible_corners(facing_away, AHEAD, model).n_corners == 0

    far = [Gate((30.0, 0.0, 2.0), 0.0)]
    assert visible_corners(AT_ORIGIN, far, model).n_corners == 0
    assert visible_corners(AT_ORIGIN, [], model).n_corners == 0


def test_visibility_counts_partial_and_picks_nearest():
    # range cuts through the gate: only the near-side corners count
    near = Gate((5.0, 0.0, 2.0), math.pi / 2)  # plane along x: corners at x = 4.25 and 5.75
    model = DetectorNoiseModel(visibility_range=5.5)
    assert visible_corners(AT_ORIGIN, [near], model).n_corners == 2

    gates = [Gate((12.0, 0.0, 2.0), 0.0), Gate((6.0, 1.0, 2.0), 0.0)]
    vis = visible_corners(AT_ORIGIN, gates, DetectorNoiseModel())
    assert vis.gate_index == 1


def test_narrow_fov_hides_side_gate():
    side = [Gate((2.0, 6.0, 2.0), 0.0)]
    assert visible_corners(AT_ORIGIN, side, DetectorNoiseModel()).n_corners == 4
    assert visible_corners(AT_ORIGIN, side, DetectorNoiseModel(fov_half_angle=math.radians(45))).n_corners == 0


def test_noise_free_measurement_is_truth():
    model = DetectorNoiseModel(sigma_p=0.0, sigma_yaw=0.0, delay=0.0)
    pose = Pose.from_euler([0.0, 0.0, 2.0], 0, 0, 0.05)
    m = synth_measurement(pose, 1.25, AHEAD, model, np.random.default_rng(0))
    assert m.pose == (0.0, 0.0, 2.0, pytest.approx(0.05))
    assert m.timestamp == 1.25 and m.delivery_time == 1.25
    assert m.confidence == pytest.approx(direct_confidence(0.02 + 0.01 * 5.0, 4))


def test_no_measurement_without_visible_gate():
    away = Pose.from_euler([0.0, 0.0, 2.0], 0, 0, math.pi)
    assert synth_measurement(away, 0.0, AHEAD, DetectorNoiseModel(), np.random.default_rng(0)) is None


def test_delay_applied():
    m = synth_measurement(AT_ORIGIN, 2.0, AHEAD, DetectorNoiseModel(delay=0.03), np.random.default_rng(0))
    assert m.timestamp == 2.0 and m.delivery_time == pytest.approx(2.03)


def test_noise_statistics():
    model = DetectorNoiseModel(sigma_p=0.01, sigma_yaw=0.02)
    rng = np.random.default_rng(42)
    n = 10_000
    errs = np.array([np.subtract(synth_measurement(AT_ORIGIN, 0.0, AHEAD, model, rng).pose, (0.0, 0.0, 2.0, 0.0))
                     for _ in range(n)])
    sd = errs.std(axis=0)
    assert np.all(np.abs(sd[:3] / 0.01 - 1) < 0.05)
    assert abs(sd[3] / 0.02 - 1) < 0.05
    bound = 3 * np.array([0.01, 0.01, 0.01, 0.02]) / math.sqrt(n)
    assert np.all(np.abs(errs.mean(axis=0)) < bound)


def test_measurement_validation():
    with pytest.raises(InvalidInputError):
        LandmarkMeasurement(0.0, (0, 0, 0, 0), 1.5)
    with pytest.raises(ConfigurationError):
        DetectorNoiseModel(rate=0.0)
    with pytest.raises(ConfigurationError):
        DetectorNoiseModel(sigma_p=-1.0)
    with pytest.raises(ConfigurationError):
        Gate((0, 0, 0), 0.0, inner_size=3.0, outer_size=2.7)


def test_gate_defaults_and_corners():
    g = Gate((1.0, 2.0, 3.0))
    assert (g.inner_size, g.outer_size) == (1.5, 2.7)
    c = g.corners()
    assert np.allclose(c[:, 0], 1.0)
    assert np.allclose(sorted(set(np.round(c[:, 1], 9))), [1.25, 2.75])
    assert np.allclose(np.linalg.norm(c - g.center, axis=1), 0.75 * math.sqrt(2))


def test_track_round_trip(tmp_path):
    text = "# x y z yaw inner outer\n0 0 2 0 1.5 2.7\n\n25 0 5.5 0 1.5 2.7  # top of split-S\n25 0 2 3.14 1.5 2.7\n"
    gates = parse_track(text)
    assert len(gates) == 3 and gates[1].center == (25.0, 0.0, 5.5)
    path = tmp_path / "t.track"
    path.write_text(format_track(gates))
    assert load_track(path) == gates


@pytest.mark.parametrize("bad", ["0 0 2 0 1.5", "0 0 two 0 1.5 2.7", "0 0 2 0 3 2"])
def test_track_errors(bad):
    with pytest.raises(ConfigurationError):
        parse_track(bad)


def test_missing_track_is_config_error(tmp_path):
    with pytest.raises(ConfigurationError):
        load_track(tmp_path / "nope.track")
