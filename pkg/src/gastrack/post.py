"""Offline processing of the two recorded streams: drone telemetry and TDLAS measurements.

Positions are interpolated in a local ENU frame built on UTM, measurements are
turned into path-average concentrations and optionally projected onto a
vertical plane for plume pictures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .gas import MeasurementRecord, StatusCode
from .geo import DegenerateGeometryError, GeodeticPosition, LocalFrame, Position3, euclidean_distance


class OutOfRangeError(ValueError):
    pass


class DegenerateDistanceError(ValueError):
    pass


class DegenerateProjectionError(ValueError):
    pass


class TelemetryLog:
    """Time-ordered drone positions, kept in the local frame for interpolation."""

    def __init__(self, times: Sequence[float], positions: Sequence[GeodeticPosition], frame: LocalFrame):
        t = np.asarray(times, dtype=float)
        if t.ndim != 1 or len(t) != len(positions):
            raise ValueError("times and positions must have equal length")
        if len(t) and np.any(np.diff(t) <= 0):
            raise ValueError("telemetry times must be strictly increasing")
        self.frame = frame
        self.times = t
        self.geodetic = list(positions)
        self.xyz = np.array([frame.to_local(p) for p in positions], dtype=float).reshape(-1, 3)

    def __len__(self):
        return len(self.times)

    @classmethod
    def from_samples(cls, samples, frame: LocalFrame) -> "TelemetryLog":
        """Build from ``(t, GeodeticPosition)`` pairs; duplicate times keep the first sample."""
        seen, times, pos = set(), [], []
        for t, p in sorted(samples, key=lambda s: s[0]):
            if t in seen:
                continue
            seen.add(t)
            times.append(t)
            pos.append(p)
        return cls(times, pos, frame)


def interpolate_position(log: TelemetryLog, t: float) -> Position3:
    if len(log) == 0 or not log.times[0] <= t <= log.times[-1]:
        raise OutOfRangeError(f"t = {t} outside telemetry range")
    k = int(np.searchsorted(log.times, t, side="right")) - 1
    if k == len(log) - 1:
        return Position3(*log.xyz[k])
    t0, t1 = log.times[k], log.times[k + 1]
    a = (t - t0) / (t1 - t0)
    return Position3(*(log.xyz[k] + a * (log.xyz[k + 1] - log.xyz[k])))


class ConcentrationSample(NamedTuple):
    t: float
    u_bar: float  # ppm
    d: float  # m
    tdlas: Position3
    drone: Position3
    status: StatusCode


def average_concentration(
    rec: MeasurementRecord, drone_at_t: Position3, tdlas_at_t: Position3, min_distance: float = 1.0
) -> ConcentrationSample:
    if not rec.status.is_valid:
        raise ValueError("ERROR records carry no usable measurement")
    d = euclidean_distance(tdlas_at_t, drone_at_t)
    if d < min_distance:
        raise DegenerateDistanceError(f"path length {d:.3f} m below {min_distance} m")
    return ConcentrationSample(rec.t, rec.m / d, d, Position3(*tdlas_at_t), Position3(*drone_at_t), rec.status)


def filter_valid(records):
    return [r for r in records if r.status.is_valid]


# --- plane projection --------------------------------------------------------

@dataclass(frozen=True)
class PlaneSpec:
    """Vertical plane through ``reference`` with horizontal unit ``normal``.

    In-plane axes: horizontal = normal x up, vertical = up; both measured from
    the reference point.
    """

    reference: Position3 = Position3(0.0, 0.0, 0.0)
    normal: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        n = math.hypot(*self.normal)
        if not math.isfinite(n) or abs(n - 1.0) > 1e-9:
            raise ValueError("plane normal must be a horizontal unit vector")

    @property
    def normal3(self) -> np.ndarray:
        return np.array([self.normal[0], self.normal[1], 0.0])

    @property
    def horizontal_axis(self) -> np.ndarray:
        return np.cross(self.normal3, [0.0, 0.0, 1.0])


def project_to_plane(sample: ConcentrationSample, plane: PlaneSpec, eps: float = 1e-12):
    """Beam/plane crossing as in-plane ``(y, z)``; ``None`` when the segment does not reach the plane."""
    a = np.asarray(sample.tdlas, dtype=float)
    b = np.asarray(sample.drone, dtype=float)
    n = plane.normal3
    ref = np.asarray(plane.reference, dtype=float)
    da = float((a - ref) @ n)
    db = float((b - ref) @ n)
    if abs(da) <= eps and abs(db) <= eps:
        raise DegenerateProjectionError("beam lies in the plane")
    # an endpoint within eps of the plane counts as touching it
    da = 0.0 if abs(da) <= eps else da
    db = 0.0 if abs(db) <= eps else db
    if da * db > 0:
        return None
    if da == db:
        return None
    s = da / (da - db)
    p = a + s * (b - a) - ref
    return float(p @ plane.horizontal_axis), float(p[2])


# --- statistics --------------------------------------------------------------

class DistanceBin(NamedTuple):
    lo: float
    hi: float
    count: int
    valid: int

    @property
    def valid_fraction(self) -> float:
        return self.valid / self.count if self.count else 0.0


def distance_status_table(records_with_d, bin_width: float) -> list[DistanceBin]:
    """Histogram of ``(record, distance)`` pairs over half-open bins ``[k w, (k+1) w)``."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    counts: dict[int, list[int]] = {}
    for rec, d in records_with_d:
        k = math.floor(d / bin_width)
        c = counts.setdefault(k, [0, 0])
        c[0] += 1
        c[1] += rec.status.is_valid
    return [DistanceBin(k * bin_width, (k + 1) * bin_width, c, v) for k, (c, v) in sorted(counts.items())]


class ErrorBudget(NamedTuple):
    worst_case: float  # ppm, background * off / (d - off)
    first_order: float  # ppm, background * off / d


def error_budget(offset_antenna_reflector: float, offset_antenna_laser: float, d: float, background: float) -> ErrorBudget:
    """Largest path-average error when antenna positions stand in for laser and reflector."""
    off = abs(offset_antenna_reflector) + abs(offset_antenna_laser)
    if not d > off:
        raise ValueError("distance must exceed the total offset")
    return ErrorBudget(background * off / (d - off), background * off / d)


class LossEpisode(NamedTuple):
    start: float
    end: float | None  # None when never recovered
    duration: float | None


def _episodes(times, lost) -> list[LossEpisode]:
    out, start = [], None
    for t, bad in zip(times, lost):
        if bad and start is None:
            start = t
        elif not bad and start is not None:
            out.append(LossEpisode(start, t, t - start))
            start = None
    if start is not None:
        out.append(LossEpisode(start, None, None))
    return out


def signal_losses(records) -> list[LossEpisode]:
    """Runs of ERROR records, each closed by the next valid record."""
    return _episodes([r.t for r in records], [not r.status.is_valid for r in records])


def vision_losses(tracker_rows) -> list[LossEpisode]:
    """Intervals the tracker spent outside VISUAL mode; rows need ``t`` and ``mode``."""
    rows = list(tracker_rows)
    return _episodes([r.t for r in rows], [getattr(r.mode, "value", r.mode) != "VISUAL" for r in rows])


def mode_occupancy(tracker_rows) -> dict[str, float]:
    rows = list(tracker_rows)
    if not rows:
        return {}
    out: dict[str, float] = {}
    for r in rows:
        key = getattr(r.mode, "value", r.mode)
        out[key] = out.get(key, 0.0) + 1.0
    return {k: v / len(rows) for k, v in sorted(out.items())}


# --- pipeline ----------------------------------------------------------------

class ResultRow(NamedTuple):
    t: float
    d: float
    u_bar: float
    plane_y: float | None
    plane_z: float | None
    status: StatusCode


class Reject(NamedTuple):
    t: float
    reason: str


def postprocess(
    telemetry: TelemetryLog,
    measurements,
    plane: PlaneSpec | None = None,
    laser_offset=(0.0, 0.0, 0.0),
    reflector_offset=(0.0, 0.0, 0.0),
    min_distance: float = 1.0,
) -> tuple[list[ResultRow], list[Reject]]:
    """Interpolate, average, filter and project every measurement.

    ``laser_offset`` and ``reflector_offset`` are added to the logged TDLAS and
    drone positions; both default to zero, i.e. the antennas stand in for the
    optical endpoints.
    """
    frame = telemetry.frame
    rows, rejects = [], []
    for rec in measurements:
        if not rec.status.is_valid:
            rejects.append(Reject(rec.t, rec.status.value))
            continue
        if rec.tdlas_position is None:
            rejects.append(Reject(rec.t, "no TDLAS position"))
            continue
        try:
            drone = np.add(interpolate_position(telemetry, rec.t), reflector_offset)
        except OutOfRangeError:
            rejects.append(Reject(rec.t, "outside telemetry time range"))
            continue
        tdlas = np.add(frame.to_local(rec.tdlas_position), laser_offset)
        try:
            cs = average_concentration(rec, Position3(*drone), Position3(*tdlas), min_distance)
        except DegenerateDistanceError as exc:
            rejects.append(Reject(rec.t, str(exc)))
            continue
        yz = None
        if plane is not None:
            try:
                yz = project_to_plane(cs, plane)
            except (DegenerateProjectionError, DegenerateGeometryError):
                yz = None
        rows.append(ResultRow(cs.t, cs.d, cs.u_bar, yz[0] if yz else None, yz[1] if yz else None, cs.status))
    return rows, rejects
