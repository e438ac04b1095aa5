"""PI tracking law, PTU plant model, and the vision/GNSS supervisor."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .geo import (
    CameraIntrinsics,
    MisalignmentAngles,
    Position3,
    PtuPose,
    misalignment_from_offset,
    misalignment_from_positions,
    wrap_angle,
)
from .vision import Detection


class VelocityCommand(NamedTuple):
    pan_rate: float  # rad/s
    tilt_rate: float


@dataclass(frozen=True)
class PtuLimits:
    pan_resolution: float = math.radians(0.006)
    tilt_resolution: float = math.radians(0.003)
    max_pan_speed: float = math.radians(60.0)
    max_tilt_speed: float = math.radians(30.0)
    tilt_min: float = math.radians(-45.0)
    tilt_max: float = math.radians(80.0)

    def __post_init__(self):
        if self.pan_resolution <= 0 or self.tilt_resolution <= 0:
            raise ValueError("resolutions must be positive")
        if self.max_pan_speed <= 0 or self.max_tilt_speed <= 0:
            raise ValueError("speed limits must be positive")
        if not self.tilt_min < self.tilt_max:
            raise ValueError("tilt_min must be below tilt_max")


@dataclass(frozen=True)
class PiGains:
    kp: float = 8.0  # 1/s
    ki: float = 16.0  # 1/s^2
    integral_limit: float = math.radians(10.0)  # rad*s


@dataclass(frozen=True)
class PiState:
    integral_phi: float = 0.0
    integral_theta: float = 0.0
    last_time: float | None = None


def _pi_axis(e: float, integral: float, kp: float, ki: float, i_max: float, u_max: float, dt: float):
    candidate = min(max(integral + e * dt, -i_max), i_max)
    u = kp * e + ki * candidate
    if abs(u) > u_max and u * e > 0:
        # saturated: suspend integration
        candidate = integral
        u = kp * e + ki * integral
    return min(max(u, -u_max), u_max), candidate


def pi_step(
    err: MisalignmentAngles,
    s: PiState,
    gains: PiGains,
    dt: float,
    limits: PtuLimits = PtuLimits(),
    now: float | None = None,
) -> tuple[VelocityCommand, PiState]:
    if dt <= 0:
        raise ValueError("dt must be positive")
    u_pan, i_pan = _pi_axis(err[0], s.integral_phi, gains.kp, gains.ki, gains.integral_limit, limits.max_pan_speed, dt)
    u_tilt, i_tilt = _pi_axis(err[1], s.integral_theta, gains.kp, gains.ki, gains.integral_limit, limits.max_tilt_speed, dt)
    return VelocityCommand(u_pan, u_tilt), PiState(i_pan, i_tilt, now)


def _quantize(x: float, res: float) -> float:
    return round(x / res) * res


def ptu_step(pose: PtuPose, cmd: VelocityCommand, lim: PtuLimits, dt: float) -> PtuPose:
    """Rate-saturated, resolution-quantised pan/tilt integration."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    pan_rate = min(max(cmd[0], -lim.max_pan_speed), lim.max_pan_speed)
    tilt_rate = min(max(cmd[1], -lim.max_tilt_speed), lim.max_tilt_speed)
    pan = _quantize(pose[0] + pan_rate * dt, lim.pan_resolution)
    tilt = _quantize(pose[1] + tilt_rate * dt, lim.tilt_resolution)
    tilt = min(max(tilt, lim.tilt_min), lim.tilt_max)
    return PtuPose(wrap_angle(pan), tilt)


# --- supervisor --------------------------------------------------------------

class Mode(enum.Enum):
    VISUAL = "VISUAL"
    GNSS_FALLBACK = "GNSS_FALLBACK"
    SEARCH = "SEARCH"


@dataclass(frozen=True)
class TrackerState:
    mode: Mode = Mode.SEARCH
    last_detection: float = -math.inf
    last_telemetry: float = -math.inf

    def since_detection(self, now: float) -> float:
        return now - self.last_detection

    def since_telemetry(self, now: float) -> float:
        return now - self.last_telemetry


class TelemetryFix(NamedTuple):
    """Latest drone position known to the ground unit, in the local frame."""

    t: float
    position: Position3


@dataclass(frozen=True)
class SupervisorConfig:
    telemetry_staleness: float = 1.0  # s


@dataclass(frozen=True)
class StationGeometry:
    position: Position3 = Position3(0.0, 0.0, 0.0)
    mount_heading: float = 0.0  # rad, azimuth of pan zero


def vision_error(det: Detection, intrinsics: CameraIntrinsics) -> MisalignmentAngles:
    """Image-space offset to PTU error. Image rows grow downwards, tilt grows upwards."""
    a = misalignment_from_offset(det.w, intrinsics)
    return MisalignmentAngles(a.d_phi, -a.d_theta)


def supervisor_step(
    det: Detection | None,
    telemetry: TelemetryFix | None,
    station: StationGeometry,
    pose: PtuPose,
    st: TrackerState,
    cfg: SupervisorConfig,
    intrinsics: CameraIntrinsics,
    now: float,
) -> tuple[MisalignmentAngles | None, TrackerState]:
    last_tel = telemetry.t if telemetry is not None else st.last_telemetry
    if det is not None:
        return vision_error(det, intrinsics), TrackerState(Mode.VISUAL, now, last_tel)
    if telemetry is not None and now - telemetry.t <= cfg.telemetry_staleness:
        try:
            err = misalignment_from_positions(station.position, station.mount_heading, pose, telemetry.position)
        except ValueError:
            err = None
        if err is not None:
            return err, TrackerState(Mode.GNSS_FALLBACK, st.last_detection, last_tel)
    return None, TrackerState(Mode.SEARCH, st.last_detection, last_tel)


@dataclass
class Tracker:
    """Single control loop owning PI state, supervisor state and the PTU pose."""

    station: StationGeometry = field(default_factory=StationGeometry)
    gains: PiGains = field(default_factory=PiGains)
    limits: PtuLimits = field(default_factory=PtuLimits)
    supervisor: SupervisorConfig = field(default_factory=SupervisorConfig)
    pose: PtuPose = PtuPose(0.0, 0.0)
    pi: PiState = field(default_factory=PiState)
    state: TrackerState = field(default_factory=TrackerState)
    error: MisalignmentAngles | None = None
    command: VelocityCommand = VelocityCommand(0.0, 0.0)

    def update(self, det, telemetry, intrinsics, now: float, dt: float) -> VelocityCommand:
        """Run supervisor and PI once per control period; the command is held until the next call."""
        err, new_state = supervisor_step(
            det, telemetry, self.station, self.pose, self.state, self.supervisor, intrinsics, now
        )
        if new_state.mode is Mode.SEARCH:
            if self.state.mode is not Mode.SEARCH:
                self.pi = PiState()
            self.command = VelocityCommand(0.0, 0.0)
        else:
            self.command, self.pi = pi_step(err, self.pi, self.gains, dt, self.limits, now)
        self.state = new_state
        self.error = err
        return self.command

    def advance(self, dt: float) -> PtuPose:
        self.pose = ptu_step(self.pose, self.command, self.limits, dt)
        return self.pose

    def step(self, det, telemetry, intrinsics, now: float, dt: float) -> PtuPose:
        self.update(det, telemetry, intrinsics, now, dt)
        return self.advance(dt)
