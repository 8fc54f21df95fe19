"""CSV run logs.

Floats are written with ``repr`` so that reading a file back gives the exact
same doubles; replay depends on it.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .landmark_model import LandmarkMeasurement
from .pipeline import ImuStream, VioStream
from .state_fusion import IMU_CHANNELS, STATE_COLUMNS

log = logging.getLogger(__name__)

MAX_MALFORMED_FRACTION = 0.01

DRIFT_COLUMNS = tuple(f"drift_{c}" for c in ("x", "vx", "y", "vy", "z", "vz", "yaw", "r"))
GT_COLUMNS = tuple(f"gt_{c}" for c in STATE_COLUMNS)
VIO_COLUMNS = tuple(f"vio_{c}" for c in STATE_COLUMNS)
FUSED_COLUMNS = tuple(f"fused_{c}" for c in STATE_COLUMNS)

RUN_HEADER = ("t", *GT_COLUMNS, *VIO_COLUMNS, *FUSED_COLUMNS, *DRIFT_COLUMNS)
FUSED_HEADER = ("t", *FUSED_COLUMNS, *DRIFT_COLUMNS)
MEASUREMENT_HEADER = ("t_meas", "t_delivered", "x", "y", "z", "yaw", "c_ld", "accepted")
RAW_VIO_HEADER = ("t", "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "p", "q", "r")
IMU_HEADER = ("t", *IMU_CHANNELS)

RUN_FILE = "run.csv"
FUSED_FILE = "fused.csv"
MEASUREMENT_FILE = "measurements.csv"
VIO_FILE = "vio.csv"
IMU_FILE = "imu.csv"


def format_float(v) -> str:
    # np.float64 repr is "np.float64(...)" under numpy 2
    return repr(float(v))


def format_rows(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path: Path, text: str) -> None:
    # newline="" keeps "\n" on every platform so checksums agree
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


@dataclass
class Table:
    header: tuple[str, ...]
    data: np.ndarray  # (N, len(header))
    malformed: int = 0

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.header.index(name)]

    def columns(self, names) -> np.ndarray:
        idx = [self.header.index(n) for n in names]
        return self.data[:, idx]

    def has(self, names) -> bool:
        return all(n in self.header for n in names)


def read_table(path: str | Path, required=()) -> Table:
    """Numeric CSV with a header row.

    Rows with the wrong field count or non-numeric fields are skipped and
    counted. More than 1% of such rows, or no usable rows, is a DataError.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = tuple(h.strip() for h in next(reader))
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            missing = [c for c in required if c not in header]
            if missing:
                raise DataError(f"{path}: missing columns {', '.join(missing)}")
            rows, malformed, total = [], 0, 0
            for row in reader:
                if not row or all(not f.strip() for f in row):
                    continue
                total += 1
                if len(row) != len(header):
                    malformed += 1
                    continue
                try:
                    rows.append([float(f) for f in row])
                except ValueError:
                    malformed += 1
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 ({exc})") from None

    if total == 0 or not rows:
        raise DataError(f"{path}: no data rows")
    if malformed > MAX_MALFORMED_FRACTION * total:
        raise DataError(f"{path}: {malformed} of {total} rows malformed (limit 1%)")
    if malformed:
        log.warning("%s: skipped %d malformed row(s) of %d", path, malformed, total)
    return Table(header, np.array(rows, dtype=float), malformed)


# -- writers ---------------------------------------------------------------------


def run_log_text(t, gt, vio, fused, drift) -> str:
    return format_rows(RUN_HEADER, np.column_stack([t, gt, vio, fused, drift]))


def fused_log_text(t, fused, drift) -> str:
    return format_rows(FUSED_HEADER, np.column_stack([t, fused, drift]))


def measurement_log_text(measurements, accepted) -> str:
    lines = [",".join(MEASUREMENT_HEADER)]
    for m, ok in zip(measurements, accepted):
        delivered = m.delivery_time if m.delivery_time is not None else m.timestamp
        fields = [format_float(v) for v in (m.timestamp, delivered, *m.pose, m.confidence)]
        lines.append(",".join(fields + ["1" if ok else "0"]))
    return "\n".join(lines) + "\n"


def raw_vio_text(vio: VioStream) -> str:
    return format_rows(RAW_VIO_HEADER, np.column_stack(
        [vio.t, vio.position, vio.orientation, vio.velocity_body, vio.rates_body]))


def imu_text(imu: ImuStream) -> str:
    return format_rows(IMU_HEADER, np.column_stack([imu.t, imu.values]))


# -- readers ---------------------------------------------------------------------


def read_raw_vio(path) -> VioStream:
    tab = read_table(path, RAW_VIO_HEADER)
    return VioStream(
        t=tab.column("t"),
        position=tab.columns(("x", "y", "z")),
        orientation=tab.columns(("qw", "qx", "qy", "qz")),
        velocity_body=tab.columns(("vx", "vy", "vz")),
        rates_body=tab.columns(("p", "q", "r")),
    )


def read_imu(path) -> ImuStream:
    tab = read_table(path, IMU_HEADER)
    return ImuStream(tab.column("t"), tab.columns(IMU_CHANNELS))


def read_measurements(path) -> list[LandmarkMeasurement]:
    """Landmark fixes; a header-only file means the detector never fired."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty file")
    if len(lines) == 1:
        return []
    tab = read_table(path, MEASUREMENT_HEADER)
    out = []
    for row in tab.columns(MEASUREMENT_HEADER[:7]):
        t_meas, t_del, x, y, z, yaw, c = row
        if not 0.0 <= c <= 1.0:
            raise DataError(f"{path}: confidence {c} outside [0, 1]")
        out.append(LandmarkMeasurement(t_meas, (x, y, z, yaw), c, t_del))
    return out
