import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from viodrift.errors import DataError
from viodrift.landmark_model import LandmarkMeasurement
from viodrift.logs import (
    IMU_HEADER,
    format_float,
    format_rows,
    imu_text,
    measurement_log_text,
    raw_vio_text,
    read_imu,
    read_measurements,
    read_raw_vio,
    read_table,
    write_text,
)
from viodrift.pipeline import ImuStream, VioStream


@given(st.floats(allow_nan=False))
def test_float_text_round_trip(v):
    assert float(format_float(v)) == v
    assert float(format_float(np.float64(v))) == v


def test_format_float_plain():
    assert format_float(np.float64(0.1)) == "0.1"
    assert format_rows(("a", "b"), [[1, 2.5]]) == "a,b\n1.0,2.5\n"


def test_vio_and_imu_round_trip(tmp_path, rng):
    n = 20
    q = rng.normal(size=(n, 4))
    vio = VioStream(np.arange(n) / 100, rng.normal(size=(n, 3)), q / np.linalg.norm(q, axis=1, keepdims=True),
                    rng.normal(size=(n, 3)), rng.normal(size=(n, 3)))
    write_text(tmp_path / "vio.csv", raw_vio_text(vio))
    back = read_raw_vio(tmp_path / "vio.csv")
    for name in ("t", "position", "orientation", "velocity_body", "rates_body"):
        assert np.array_equal(getattr(back, name), getattr(vio, name))

    imu = ImuStream(np.arange(4 * n) / 400, rng.normal(size=(4 * n, 4)))
    write_text(tmp_path / "imu.csv", imu_text(imu))
    back = read_imu(tmp_path / "imu.csv")
    assert np.array_equal(back.t, imu.t) and np.array_equal(back.values, imu.values)


def test_measurement_round_trip(tmp_path):
    ms = [LandmarkMeasurement(0.1, (1.0, 2.0, 3.0, -0.5), 0.7, 0.13),
          LandmarkMeasurement(0.2, (1.5, 2.0, 3.0, 3.1), 0.3)]
    text = measurement_log_text(ms, [True, False])
    assert text.splitlines()[1].endswith(",1") and text.splitlines()[2].endswith(",0")
    write_text(tmp_path / "m.csv", text)
    back = read_measurements(tmp_path / "m.csv")
    assert back[0] == ms[0]
    assert back[1].delivery_time == 0.2 and back[1].pose == ms[1].pose


def test_header_only_measurements(tmp_path):
    write_text(tmp_path / "m.csv", measurement_log_text([], []))
    assert read_measurements(tmp_path / "m.csv") == []


def test_empty_logs_are_data_errors(tmp_path):
    (tmp_path / "e.csv").write_text("")
    for reader in (read_measurements, read_imu, read_raw_vio):
        with pytest.raises(DataError):
            reader(tmp_path / "e.csv")
    (tmp_path / "h.csv").write_text(",".join(IMU_HEADER) + "\n")
    with pytest.raises(DataError):
        read_imu(tmp_path / "h.csv")


def test_missing_file_and_columns(tmp_path):
    with pytest.raises(DataError):
        read_table(tmp_path / "none.csv")
    (tmp_path / "v.csv").write_text("t,x\n0,1\n")
    with pytest.raises(DataError):
        read_raw_vio(tmp_path / "v.csv")


def imu_rows(n, bad):
    rows = [",".join(IMU_HEADER)]
    rows += [f"{k / 400!r},0.0,0.0,0.0,0.0" for k in range(n)]
    for i in range(bad):
        rows[1 + i * 7] = "garbage" if i % 2 else "0.1,0.2"
    return "\n".join(rows) + "\n"


def test_few_malformed_rows_are_skipped(tmp_path, caplog):
    (tmp_path / "imu.csv").write_text(imu_rows(1000, 10))
    tab = read_table(tmp_path / "imu.csv", IMU_HEADER)
    assert tab.malformed == 10 and len(tab.data) == 990
    assert "malformed" in caplog.text


def test_many_malformed_rows_abort(tmp_path):
    (tmp_path / "imu.csv").write_text(imu_rows(1000, 11))
    with pytest.raises(DataError, match="malformed"):
        read_imu(tmp_path / "imu.csv")


def test_confidence_out_of_range_rejected(tmp_path):
    (tmp_path / "m.csv").write_text("t_meas,t_delivered,x,y,z,yaw,c_ld,accepted\n0,0,0,0,0,0,1.5,1\n")
    with pytest.raises(DataError):
        read_measurements(tmp_path / "m.csv")
