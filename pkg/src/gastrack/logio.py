"""CSV log schemas.

Rows are held in file units (degrees, ppm*m). Floats are written with
``repr`` so write -> read -> write is byte-identical. Time columns hold float
seconds, or ISO-8601 timestamps when an epoch is given; readers accept both.
"""
from __future__ import annotations

import csv
import io
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import NamedTuple

from .gas import MeasurementRecord, StatusCode
from .geo import GeodeticPosition

TELEMETRY_HEADER = ("t_j", "lat", "lon", "alt", "seq")
MEASUREMENT_HEADER = ("t_i", "m_ppm_m", "status", "signal_strength", "lat", "lon", "alt")
TRACKER_HEADER = ("t", "mode", "pan_deg", "tilt_deg", "d_phi_deg", "d_theta_deg", "zoom")
RESULTS_HEADER = ("t_i", "d_m", "u_bar_ppm", "plane_y_m", "plane_z_m", "status")
REJECTS_HEADER = ("t_i", "reason")

UNIX_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class SchemaError(ValueError):
    """Malformed CSV; ``row`` is 1-based counting the header, ``column`` may be None."""

    def __init__(self, path, row: int, column: str | None, message: str):
        self.path, self.row, self.column = path, row, column
        where = f"{path}: row {row}" + (f", column {column!r}" if column else "")
        super().__init__(f"{where}: {message}")


class TelemetryRow(NamedTuple):
    t: float
    lat: float
    lon: float
    alt: float
    seq: int


class MeasurementRow(NamedTuple):
    t: float
    m: float | None  # None for ERROR records
    status: StatusCode
    signal_strength: float
    lat: float
    lon: float
    alt: float

    def to_record(self) -> MeasurementRecord:
        return MeasurementRecord(
            self.t, math.nan if self.m is None else self.m, self.status, self.signal_strength,
            GeodeticPosition(self.lat, self.lon, self.alt),
        )

    @classmethod
    def from_record(cls, rec: MeasurementRecord) -> "MeasurementRow":
        p = rec.tdlas_position
        m = None if math.isnan(rec.m) else rec.m
        return cls(rec.t, m, rec.status, rec.signal_strength, p.latitude, p.longitude, p.altitude)


class TrackerCsvRow(NamedTuple):
    t: float
    mode: str
    pan_deg: float
    tilt_deg: float
    d_phi_deg: float | None
    d_theta_deg: float | None
    zoom: float


class ResultCsvRow(NamedTuple):
    t: float
    d: float
    u_bar: float
    plane_y: float | None
    plane_z: float | None
    status: StatusCode


# --- formatting --------------------------------------------------------------

def _f(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _time(t: float, epoch: datetime | None) -> str:
    if epoch is None:
        return repr(float(t))
    return datetime.fromtimestamp(epoch.timestamp() + t, tz=timezone.utc).isoformat()


def parse_time(text: str, epoch: datetime = UNIX_EPOCH) -> float:
    """Float seconds, or an ISO-8601 timestamp converted to seconds since ``epoch``."""
    try:
        return float(text)
    except ValueError:
        pass
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return (dt - epoch).total_seconds()


def _write(path, header, rows) -> None:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def _read(path, header):
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text, newline="")))
    if not rows:
        raise SchemaError(path, 1, None, "missing header")
    if tuple(rows[0]) != header:
        raise SchemaError(path, 1, None, f"expected header {','.join(header)}, got {','.join(rows[0])}")
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SchemaError(path, k, None, f"expected {len(header)} fields, got {len(row)}")
        yield k, dict(zip(header, row))


def _parse(path, k, row, col, conv):
    try:
        return conv(row[col])
    except (ValueError, KeyError) as exc:
        raise SchemaError(path, k, col, f"cannot parse {row[col]!r}: {exc}") from None


def _opt_float(text: str):
    return None if text == "" else float(text)


# --- telemetry / truth -------------------------------------------------------

def write_telemetry(path, rows, epoch: datetime | None = None) -> None:
    _write(path, TELEMETRY_HEADER, ([_time(r.t, epoch), _f(r.lat), _f(r.lon), _f(r.alt), str(r.seq)] for r in rows))


def read_telemetry(path, epoch: datetime = UNIX_EPOCH) -> list[TelemetryRow]:
    out = []
    for k, row in _read(path, TELEMETRY_HEADER):
        out.append(TelemetryRow(
            _parse(path, k, row, "t_j", lambda s: parse_time(s, epoch)),
            _parse(path, k, row, "lat", float),
            _parse(path, k, row, "lon", float),
            _parse(path, k, row, "alt", float),
            _parse(path, k, row, "seq", int),
        ))
    return out


def telemetry_rows(messages) -> list[TelemetryRow]:
    return [TelemetryRow(m.t, m.position.latitude, m.position.longitude, m.position.altitude, m.seq) for m in messages]


# --- measurements ------------------------------------------------------------

def write_measurements(path, rows, epoch: datetime | None = None) -> None:
    _write(path, MEASUREMENT_HEADER, (
        [_time(r.t, epoch), _f(r.m), r.status.value, _f(r.signal_strength), _f(r.lat), _f(r.lon), _f(r.alt)]
        for r in rows
    ))


def read_measurements(path, epoch: datetime = UNIX_EPOCH) -> list[MeasurementRow]:
    out = []
    for k, row in _read(path, MEASUREMENT_HEADER):
        status = _parse(path, k, row, "status", StatusCode)
        m = _parse(path, k, row, "m_ppm_m", _opt_float)
        if m is None and status.is_valid:
            raise SchemaError(path, k, "m_ppm_m", "valid status without a measurement")
        out.append(MeasurementRow(
            _parse(path, k, row, "t_i", lambda s: parse_time(s, epoch)),
            m,
            status,
            _parse(path, k, row, "signal_strength", float),
            _parse(path, k, row, "lat", float),
            _parse(path, k, row, "lon", float),
            _parse(path, k, row, "alt", float),
        ))
    return out


# --- tracker -----------------------------------------------------------------

def tracker_rows(rows) -> list[TrackerCsvRow]:
    deg = math.degrees
    return [
        TrackerCsvRow(
            r.t, r.mode.value, deg(r.pan), deg(r.tilt),
            None if r.d_phi is None else deg(r.d_phi),
            None if r.d_theta is None else deg(r.d_theta),
            r.zoom,
        )
        for r in rows
    ]


def write_tracker(path, rows, epoch: datetime | None = None) -> None:
    _write(path, TRACKER_HEADER, (
        [_time(r.t, epoch), r.mode, _f(r.pan_deg), _f(r.tilt_deg), _f(r.d_phi_deg), _f(r.d_theta_deg), _f(r.zoom)]
        for r in rows
    ))


def read_tracker(path, epoch: datetime = UNIX_EPOCH) -> list[TrackerCsvRow]:
    out = []
    for k, row in _read(path, TRACKER_HEADER):
        if row["mode"] not in ("VISUAL", "GNSS_FALLBACK", "SEARCH"):
            raise SchemaError(path, k, "mode", f"unknown mode {row['mode']!r}")
        out.append(TrackerCsvRow(
            _parse(path, k, row, "t", lambda s: parse_time(s, epoch)),
            row["mode"],
            _parse(path, k, row, "pan_deg", float),
            _parse(path, k, row, "tilt_deg", float),
            _parse(path, k, row, "d_phi_deg", _opt_float),
            _parse(path, k, row, "d_theta_deg", _opt_float),
            _parse(path, k, row, "zoom", float),
        ))
    return out


# --- results -----------------------------------------------------------------

def write_results(path, rows, epoch: datetime | None = None) -> None:
    _write(path, RESULTS_HEADER, (
        [_time(r.t, epoch), _f(r.d), _f(r.u_bar), _f(r.plane_y), _f(r.plane_z), r.status.value] for r in rows
    ))


def read_results(path, epoch: datetime = UNIX_EPOCH) -> list[ResultCsvRow]:
    out = []
    for k, row in _read(path, RESULTS_HEADER):
        out.append(ResultCsvRow(
            _parse(path, k, row, "t_i", lambda s: parse_time(s, epoch)),
            _parse(path, k, row, "d_m", float),
            _parse(path, k, row, "u_bar_ppm", float),
            _parse(path, k, row, "plane_y_m", _opt_float),
            _parse(path, k, row, "plane_z_m", _opt_float),
            _parse(path, k, row, "status", StatusCode),
        ))
    return out


def write_rejects(path, rejects) -> None:
    _write(path, REJECTS_HEADER, ([repr(float(r.t)), r.reason] for r in rejects))
