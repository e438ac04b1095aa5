"""Deterministic software-in-the-loop world: drone kinematics, camera renderer, run loop.

Everything cross-agent lives in the station's local ENU frame, whose origin
is the ground point below the tripod. Heights are above (flat) ground.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import control, gas, link, vision
from .geo import (
    CameraIntrinsics,
    FrameGeometry,
    GeodeticPosition,
    LocalFrame,
    MisalignmentAngles,
    Position3,
    PtuPose,
    azimuth_elevation,
    boresight,
    camera_axes,
    offset_from_misalignment,
    pixel_from_offset,
)


class ConfigError(ValueError):
    """Invalid scenario configuration; ``problems`` lists ``(field path, message)``."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"{k}: {v}" for k, v in self.problems))


# --- kinematics --------------------------------------------------------------

@dataclass(frozen=True)
class Route:
    waypoints: tuple[Position3, ...]
    cruise_speed: float = 1.0
    arrival_tolerance: float = 0.25

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("route needs at least one waypoint")
        if self.cruise_speed <= 0:
            raise ValueError("cruise_speed must be positive")

    @property
    def length(self) -> float:
        return float(sum(math.dist(a, b) for a, b in zip(self.waypoints, self.waypoints[1:])))


@dataclass(frozen=True)
class DroneState:
    position: Position3
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    waypoint: int = 1  # index of the active waypoint
    t: float = 0.0

    @classmethod
    def at_start(cls, route: Route) -> "DroneState":
        return cls(Position3(*route.waypoints[0]), waypoint=1)


def drone_step(d: DroneState, r: Route, dt: float) -> DroneState:
    """Constant-speed flight along the route; waypoints are passed without stopping."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    pos = np.array(d.position, dtype=float)
    idx = d.waypoint
    n = len(r.waypoints)
    if idx < n and math.dist(pos, r.waypoints[idx]) <= r.arrival_tolerance:
        idx += 1
    budget = r.cruise_speed * dt
    while budget > 0 and idx < n:
        target = np.array(r.waypoints[idx], dtype=float)
        vec = target - pos
        dist = float(np.linalg.norm(vec))
        if dist <= budget:
            pos = target
            budget -= dist
            idx += 1
        else:
            pos = pos + vec * (budget / dist)
            budget = 0.0
    velocity = tuple((pos - np.asarray(d.position)) / dt)
    return DroneState(Position3(*pos), velocity, idx, d.t + dt)


# --- renderer ----------------------------------------------------------------

@dataclass(frozen=True)
class RenderConfig:
    led_ring_radius: float = 0.15  # m
    ring_thickness: float = 3.0  # px
    ring_brightness: tuple[int, int] = (170, 255)
    ring_chroma: float = 0.08  # green/blue as a fraction of red
    background: tuple[int, int, int] = (70, 90, 110)
    distractor_count: int = 0
    distractor_size: int = 3  # px, square side
    distractor_color: tuple[int, int, int] = (220, 30, 30)
    noise_probability: float = 2e-5

    def __post_init__(self):
        if self.led_ring_radius <= 0:
            raise ValueError("led_ring_radius must be positive")


def ring_pixel_radius(distance: float, intrinsics: CameraIntrinsics, fg: FrameGeometry, rc: RenderConfig) -> float:
    return rc.led_ring_radius / (2.0 * distance * math.tan(intrinsics.hfov / 2.0)) * fg.res_x1


def project(
    target, station, mount_heading: float, pose: PtuPose, intrinsics: CameraIntrinsics, fg: FrameGeometry
):
    """Pixel position of ``target`` or ``None`` when behind the camera."""
    v = np.subtract(target, station, dtype=float)
    right, down, forward = camera_axes(mount_heading, pose)
    z = float(v @ forward)
    if z <= 0:
        return None
    a = MisalignmentAngles(math.atan2(float(v @ right), z), math.atan2(float(v @ down), z))
    return pixel_from_offset(offset_from_misalignment(a, intrinsics), fg)


def draw_ring(frame: np.ndarray, center, radius: float, rc: RenderConfig, rng: np.random.Generator):
    h, w = frame.shape[:2]
    outer = radius + rc.ring_thickness / 2.0
    inner = max(radius - rc.ring_thickness / 2.0, 0.0)
    c0, r0 = center
    x_lo, x_hi = max(int(math.floor(c0 - outer)), 0), min(int(math.ceil(c0 + outer)), w - 1)
    y_lo, y_hi = max(int(math.floor(r0 - outer)), 0), min(int(math.ceil(r0 + outer)), h - 1)
    if x_lo > x_hi or y_lo > y_hi:
        return
    cols = np.arange(x_lo, x_hi + 1)
    rows = np.arange(y_lo, y_hi + 1)
    dist = np.hypot(cols[None, :] - c0, rows[:, None] - r0)
    on = (dist <= outer) & (dist >= inner)
    rr, cc = np.nonzero(on)
    if rr.size == 0:
        return
    lo, hi = rc.ring_brightness
    v = rng.integers(lo, hi + 1, size=rr.size)
    side = np.round(v * rc.ring_chroma)
    frame[rr + y_lo, cc + x_lo] = np.column_stack([v, side, side]).astype(np.uint8)


@functools.lru_cache(maxsize=4)
def _background(h: int, w: int, color: tuple) -> np.ndarray:
    frame = np.empty((h, w, 3), dtype=np.uint8)
    frame[...] = color
    frame.flags.writeable = False
    return frame


def render_frame(
    true_drone,
    station,
    mount_heading: float,
    pose: PtuPose,
    intrinsics: CameraIntrinsics,
    fg: FrameGeometry,
    rc: RenderConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    frame = _background(fg.res_x2, fg.res_x1, tuple(rc.background)).copy()
    center = None if true_drone is None else project(true_drone, station, mount_heading, pose, intrinsics, fg)
    if center is not None:
        d = math.dist(true_drone, station)
        draw_ring(frame, center, ring_pixel_radius(d, intrinsics, fg, rc), rc, rng)
    for _ in range(rc.distractor_count):
        x = int(rng.integers(0, fg.res_x1 - rc.distractor_size + 1))
        y = int(rng.integers(0, fg.res_x2 - rc.distractor_size + 1))
        frame[y:y + rc.distractor_size, x:x + rc.distractor_size] = rc.distractor_color
    if rc.noise_probability > 0:
        k = int(rng.binomial(fg.res_x1 * fg.res_x2, rc.noise_probability))
        if k:
            idx = rng.integers(0, fg.res_x1 * fg.res_x2, size=k)
            frame.reshape(-1, 3)[idx] = rng.integers(0, 256, size=(k, 3), dtype=np.uint8)
    return frame


# --- scenario configuration --------------------------------------------------

@dataclass(frozen=True)
class StationConfig:
    latitude: float = 48.2655
    longitude: float = 11.6702
    altitude: float = 480.0  # ground height of the tripod, m
    laser_height: float = 1.5  # m above ground
    mount_heading_deg: float = 0.0
    antenna_offset: tuple[float, float, float] = (0.0, 0.0, 0.1)  # laser -> GNSS antenna


@dataclass(frozen=True)
class DroneConfig:
    waypoints: tuple[tuple[float, float, float], ...] = ((0.0, 10.0, 3.0), (0.0, 30.0, 3.0))
    cruise_speed: float = 1.0
    arrival_tolerance: float = 0.25
    reflector_offset: tuple[float, float, float] = (0.0, 0.0, -0.4)  # GNSS antenna -> reflector
    gnss_sd: float = 0.01  # m, RTK fix
    telemetry_rate: float = 5.0  # Hz
    # seconds the LED ring stays hidden after each turn (the airframe banks and covers it)
    turn_occlusion: float = 0.0


@dataclass(frozen=True)
class CameraConfig:
    base_hfov_deg: float = 60.0
    width: int = 640
    height: int = 480


@dataclass(frozen=True)
class VisionSection:
    hue_windows: tuple[tuple[float, float], ...] = ((0.0, 10.0), (350.0, 360.0))
    saturation_min: float = 0.6
    value_min: float = 0.3
    eps: float = 3.0
    min_pts: int = 4
    zoom_lower_px: float = 20.0
    zoom_upper_px: float = 120.0
    zoom_dwell: float = 0.5
    zoom_steps: int = 12
    max_zoom: float = 12.0


@dataclass(frozen=True)
class ControlSection:
    rate: float = 20.0  # Hz, camera frames and PI updates
    kp: float = 8.0
    ki: float = 16.0
    integral_limit_deg: float = 10.0
    max_pan_speed_deg: float = 60.0
    max_tilt_speed_deg: float = 30.0
    pan_resolution_deg: float = 0.006
    tilt_resolution_deg: float = 0.003
    tilt_min_deg: float = -45.0
    tilt_max_deg: float = 80.0
    telemetry_staleness: float = 1.0


@dataclass(frozen=True)
class PlumeConfig:
    source: tuple[float, float, float] = (0.0, -16.0, 1.5)
    emission_rate_lpm: float = 25.0
    wind: tuple[float, float] = (0.5, -1.9)
    sigma_y: tuple[float, float] = (0.08, 0.9)
    sigma_z: tuple[float, float] = (0.06, 1.0)
    initial_sigma: float = 0.3


@dataclass(frozen=True)
class GasSection:
    background_ppm: float = 400.0
    plume: PlumeConfig | None = None


@dataclass(frozen=True)
class SensorSection:
    rate: float = 10.0  # Hz
    max_range: float = 60.0
    reflector_radius: float = 0.125
    beam_divergence: float = 0.002
    warn_fraction: float = 0.8
    overexposure_distance: float = 3.0
    noise_sd: float = 5.0
    extinction: float = 1e-3


@dataclass(frozen=True)
class LinkSection:
    latency: float = 0.05
    jitter_sd: float = 0.01
    drop_probability: float = 0.0
    correction_rate: float = 1.0  # Hz, RTK corrections ground -> drone
    correction_bytes: int = 64


@dataclass(frozen=True)
class SunConfig:
    azimuth_deg: float = 180.0
    elevation_deg: float = 30.0
    glare_half_angle_deg: float = 5.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "custom"
    version: int = 1
    duration: float = 30.0
    timestep: float = 0.05
    seed: int = 0
    station: StationConfig = field(default_factory=StationConfig)
    drone: DroneConfig = field(default_factory=DroneConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    vision: VisionSection = field(default_factory=VisionSection)
    control: ControlSection = field(default_factory=ControlSection)
    gas: GasSection = field(default_factory=GasSection)
    sensor: SensorSection = field(default_factory=SensorSection)
    link: LinkSection = field(default_factory=LinkSection)
    render: RenderConfig = field(default_factory=RenderConfig)
    sun: SunConfig | None = None


def _cadence(rate: float, dt: float, name: str, problems) -> int:
    if rate <= 0:
        problems.append((name, "rate must be positive"))
        return 1
    k = round(1.0 / (rate * dt))
    if k < 1 or abs(k * dt * rate - 1.0) > 1e-6:
        problems.append((name, f"period {1 / rate} s is not an integer multiple of timestep {dt} s"))
    return max(k, 1)


def validate(cfg: ScenarioConfig) -> dict:
    """Check cross-field constraints; returns derived cadences or raises ConfigError."""
    problems = []
    if cfg.version != 1:
        problems.append(("version", f"unsupported version {cfg.version}"))
    if cfg.timestep <= 0:
        problems.append(("timestep", "must be positive"))
    if cfg.duration <= 0:
        problems.append(("duration", "must be positive"))
    if not cfg.drone.waypoints:
        problems.append(("drone.waypoints", "need at least one waypoint"))
    if cfg.drone.cruise_speed <= 0:
        problems.append(("drone.cruise_speed", "must be positive"))
    if cfg.drone.turn_occlusion < 0:
        problems.append(("drone.turn_occlusion", "must be nonnegative"))
    if cfg.camera.width <= 0 or cfg.camera.height <= 0:
        problems.append(("camera", "resolution must be positive"))
    if not 0 < cfg.camera.base_hfov_deg < 180:
        problems.append(("camera.base_hfov_deg", "must lie in (0, 180)"))
    if not cfg.vision.zoom_lower_px < cfg.vision.zoom_upper_px:
        problems.append(("vision.zoom_lower_px", "must be below zoom_upper_px"))
    if not 0 < cfg.sensor.warn_fraction < 1:
        problems.append(("sensor.warn_fraction", "must lie in (0, 1)"))
    if not 0 <= cfg.link.drop_probability <= 1:
        problems.append(("link.drop_probability", "must lie in [0, 1]"))
    if cfg.gas.plume is not None and math.hypot(*cfg.gas.plume.wind) == 0:
        problems.append(("gas.plume.wind", "wind speed must be nonzero"))
    dt = cfg.timestep if cfg.timestep > 0 else 1.0
    cad = {
        "control": _cadence(cfg.control.rate, dt, "control.rate", problems),
        "sensor": _cadence(cfg.sensor.rate, dt, "sensor.rate", problems),
        "telemetry": _cadence(cfg.drone.telemetry_rate, dt, "drone.telemetry_rate", problems),
        "correction": _cadence(cfg.link.correction_rate, dt, "link.correction_rate", problems),
    }
    if problems:
        raise ConfigError(problems)
    return cad


def build_field(g: GasSection) -> gas.GasField:
    fields = [gas.UniformField(g.background_ppm)]
    if g.plume is not None:
        p = g.plume
        fields.append(gas.GaussianPlumeField(
            tuple(p.source), p.emission_rate_lpm, tuple(p.wind), tuple(p.sigma_y), tuple(p.sigma_z), p.initial_sigma
        ))
    return gas.SumField(tuple(fields))


def build_sensor(s: SensorSection) -> gas.SensorModel:
    return gas.SensorModel(
        s.max_range, s.reflector_radius, s.beam_divergence, s.warn_fraction,
        s.overexposure_distance, s.noise_sd, s.extinction,
    )


def build_vision(v: VisionSection, c: CameraConfig) -> tuple[vision.VisionConfig, vision.ZoomPolicy]:
    vc = vision.VisionConfig(
        vision.HsvThresholds(tuple(map(tuple, v.hue_windows)), v.saturation_min, v.value_min),
        vision.DbscanParams(v.eps, v.min_pts),
        FrameGeometry(c.width, c.height),
    )
    return vc, vision.ZoomPolicy(v.zoom_lower_px, v.zoom_upper_px, v.zoom_dwell, v.zoom_steps, v.max_zoom)


def build_limits(c: ControlSection) -> control.PtuLimits:
    r = math.radians
    return control.PtuLimits(
        r(c.pan_resolution_deg), r(c.tilt_resolution_deg), r(c.max_pan_speed_deg),
        r(c.max_tilt_speed_deg), r(c.tilt_min_deg), r(c.tilt_max_deg),
    )


# --- run loop ----------------------------------------------------------------

class TrackerRow(NamedTuple):
    t: float
    mode: control.Mode
    pan: float
    tilt: float
    d_phi: float | None
    d_theta: float | None
    zoom: float


class TruthRow(NamedTuple):
    t: float
    reflector: Position3


@dataclass
class RunLogs:
    config: ScenarioConfig
    frame: LocalFrame
    station_laser: Position3
    telemetry: list = field(default_factory=list)  # TelemetryMessage, as logged by the drone
    measurements: list = field(default_factory=list)  # MeasurementRecord
    tracker: list = field(default_factory=list)  # TrackerRow
    truth: list = field(default_factory=list)  # TruthRow
    waypoint_arrivals: list = field(default_factory=list)  # (t, index)
    link_stats: dict = field(default_factory=dict)

    def truth_geodetic(self, row: TruthRow) -> GeodeticPosition:
        return self.frame.to_geodetic(row.reflector)


def _sun_in_view(cfg: SunConfig | None, beam: np.ndarray) -> bool:
    if cfg is None:
        return False
    sun = boresight(math.radians(cfg.azimuth_deg), PtuPose(0.0, math.radians(cfg.elevation_deg)))
    return float(beam @ sun) >= math.cos(math.radians(cfg.glare_half_angle_deg))


def _tick(k: int, dt: float) -> float:
    return round(k * dt, 9)


def run_scenario(cfg: ScenarioConfig) -> RunLogs:
    cad = validate(cfg)
    dt = cfg.timestep
    st = cfg.station
    frame = LocalFrame(GeodeticPosition(st.latitude, st.longitude, st.altitude))
    laser = Position3(0.0, 0.0, st.laser_height)
    antenna = Position3(*np.add(laser, st.antenna_offset))
    tdlas_geo = frame.to_geodetic(antenna)
    heading = math.radians(st.mount_heading_deg)

    route = Route(tuple(Position3(*w) for w in cfg.drone.waypoints), cfg.drone.cruise_speed, cfg.drone.arrival_tolerance)
    reflector_offset = np.asarray(cfg.drone.reflector_offset, dtype=float)
    field_ = build_field(cfg.gas)
    sensor = build_sensor(cfg.sensor)
    vcfg, zoom_policy = build_vision(cfg.vision, cfg.camera)
    fg = vcfg.frame
    base = CameraIntrinsics.from_hfov(math.radians(cfg.camera.base_hfov_deg), fg)
    limits = build_limits(cfg.control)

    streams = np.random.SeedSequence(cfg.seed).spawn(6)
    render_rng, sensor_rng, gnss_rng, up_rng, down_rng, corr_rng = (np.random.default_rng(s) for s in streams)
    lp = link.LinkParams(cfg.link.latency, cfg.link.jitter_sd, cfg.link.drop_probability)
    uplink = link.Channel(lp, up_rng)
    downlink = link.Channel(lp, down_rng)

    drone = DroneState.at_start(route)
    start_reflector = np.asarray(drone.position) + reflector_offset
    az, el = azimuth_elevation(start_reflector - np.asarray(laser))
    tracker = control.Tracker(
        station=control.StationGeometry(laser, heading),
        gains=control.PiGains(cfg.control.kp, cfg.control.ki, math.radians(cfg.control.integral_limit_deg)),
        limits=limits,
        supervisor=control.SupervisorConfig(cfg.control.telemetry_staleness),
    )
    # the operator points the PTU at the drone before take-off
    tracker.pose = control.ptu_step(PtuPose(az - heading, el), control.VelocityCommand(0, 0), limits, 1.0)
    zoom = vision.ZoomState(0, -math.inf, zoom_policy.zoom_at(0))

    logs = RunLogs(cfg, frame, laser)
    fix: control.TelemetryFix | None = None
    hidden_until = -math.inf
    tel_seq = corr_seq = 0
    corrections_received = decode_errors = 0
    control_dt = cad["control"] * dt
    n_steps = int(round(cfg.duration / dt))

    for k in range(n_steps + 1):
        t = _tick(k, dt)
        if k > 0:
            prev = drone.waypoint
            drone = drone_step(drone, route, dt)
            for i in range(prev, drone.waypoint):
                logs.waypoint_arrivals.append((t, i))
                if i < len(route.waypoints) - 1:
                    hidden_until = t + cfg.drone.turn_occlusion
        reflector = Position3(*(np.asarray(drone.position) + reflector_offset))
        logs.truth.append(TruthRow(t, reflector))

        if k % cad["telemetry"] == 0:
            noisy = np.asarray(drone.position) + (gnss_rng.normal(0.0, cfg.drone.gnss_sd, 3) if cfg.drone.gnss_sd > 0 else 0.0)
            msg = link.TelemetryMessage(tel_seq, t, frame.to_geodetic(noisy))
            tel_seq += 1
            logs.telemetry.append(msg)
            uplink.send(link.encode(msg), t, "drone")
        if k % cad["correction"] == 0:
            payload = corr_rng.bytes(cfg.link.correction_bytes)
            downlink.send(link.encode(link.CorrectionMessage(corr_seq, payload)), t, "ground")
            corr_seq += 1
        for _, _, datagram in downlink.step(t):
            try:
                link.decode(datagram)
                corrections_received += 1
            except link.FrameError:
                decode_errors += 1
        for _, _, datagram in uplink.step(t):
            try:
                msg, _ = link.decode(datagram)
            except link.FrameError:
                decode_errors += 1
                continue
            if fix is None or msg.t > fix.t:
                fix = control.TelemetryFix(msg.t, frame.to_local(msg.position))

        if k % cad["control"] == 0:
            intrinsics = vision.fov_for_zoom(zoom.zoom, base)
            visible = reflector if t >= hidden_until else None
            img = render_frame(visible, laser, heading, tracker.pose, intrinsics, fg, cfg.render, render_rng)
            det = vision.detect(img, vcfg)
            zoom = vision.apply_zoom(zoom, vision.zoom_step(det, zoom, zoom_policy, t), zoom_policy, t)
            tracker.update(det, fix, intrinsics, t, control_dt)
            err = tracker.error
            logs.tracker.append(TrackerRow(
                t, tracker.state.mode, tracker.pose.pan, tracker.pose.tilt,
                None if err is None else err.d_phi, None if err is None else err.d_theta, zoom.zoom,
            ))
        tracker.advance(dt)

        if k % cad["sensor"] == 0:
            beam = boresight(heading, tracker.pose)
            rec = gas.tdlas_measure(
                sensor, field_, laser, reflector, beam, t, sensor_rng,
                sun_in_view=_sun_in_view(cfg.sun, beam), tdlas_position=tdlas_geo,
            )
            logs.measurements.append(rec)

    logs.link_stats = {
        "telemetry_sent": uplink.sent,
        "telemetry_dropped": uplink.dropped,
        "corrections_sent": downlink.sent,
        "corrections_received": corrections_received,
        "decode_errors": decode_errors,
    }
    return logs


# --- builtin scenarios -------------------------------------------------------

def _climb(points_2d, z0: float, z1: float) -> tuple[tuple[float, float, float], ...]:
    """Attach heights varying linearly with path length from z0 to z1."""
    pts = np.asarray(points_2d, dtype=float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    z = z0 + (z1 - z0) * s / s[-1]
    return tuple((float(x), float(y), round(float(h), 6)) for (x, y), h in zip(pts, z))


def _duration(waypoints, speed: float, slack: float = 3.0) -> float:
    length = sum(math.dist(a, b) for a, b in zip(waypoints, waypoints[1:]))
    return float(math.ceil(length / speed + slack))


def zigzag_range(seed: int = 0) -> ScenarioConfig:
    st = StationConfig()
    tdlas = st.laser_height + st.antenna_offset[2]
    legs = [(-6.0, -2.0), (12.0, 12.0), (-12.0, 24.0), (12.0, 36.0), (-12.0, 48.0), (12.0, 60.0), (-12.0, 70.0)]
    # logged drone height climbs from 0.8 m to 7.9 m above the logged TDLAS position
    wps = _climb(legs, tdlas + 0.8, tdlas + 7.9)
    drone = DroneConfig(waypoints=wps, cruise_speed=1.0, turn_occlusion=1.0)
    return ScenarioConfig(name="zigzag-range", duration=_duration(wps, 1.0), seed=seed, drone=drone)


def plume_scan(seed: int = 0) -> ScenarioConfig:
    y = -46.0  # 30 m further south than the source
    xs = [-12.0, 12.0] * 3 + [-12.0]
    wps = _climb([(x, y) for x in xs], 6.0, 1.8)
    drone = DroneConfig(waypoints=wps, cruise_speed=1.0)
    return ScenarioConfig(
        name="plume-scan",
        duration=_duration(wps, 1.0),
        seed=seed,
        drone=drone,
        gas=GasSection(400.0, PlumeConfig()),
    )


def flyaway_range(seed: int = 0) -> ScenarioConfig:
    wps = ((0.0, 10.0, 3.0), (0.0, 80.0, 3.0))
    drone = DroneConfig(waypoints=wps, cruise_speed=2.0)
    return ScenarioConfig(name="flyaway-range", duration=_duration(wps, 2.0, 1.0), seed=seed, drone=drone)


def close_flyby(seed: int = 0) -> ScenarioConfig:
    wps = ((-1.5, -25.0, 2.0), (-1.5, 25.0, 2.0))
    drone = DroneConfig(waypoints=wps, cruise_speed=3.0)
    return ScenarioConfig(name="close-flyby", duration=_duration(wps, 3.0, 2.0), seed=seed, drone=drone)


BUILTIN = {
    "zigzag-range": zigzag_range,
    "plume-scan": plume_scan,
    "flyaway-range": flyaway_range,
    "close-flyby": close_flyby,
}


def builtin_scenarios(seed: int = 0) -> dict[str, ScenarioConfig]:
    return {name: make(seed) for name, make in BUILTIN.items()}
