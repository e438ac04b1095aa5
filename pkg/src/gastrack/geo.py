"""Coordinate systems and the angle math linking pixels, fields of view and world positions.

Geodetic positions are projected to UTM with the 6th-order Krüger series
(Karney 2011). Cross-agent geometry happens in a local East-North-Up frame
anchored at the ground station's UTM position.

Pixel convention: pixel ``(i, j)`` covers ``[i, i+1) x [j, j+1)`` and pixel
coordinates refer to its index, so the geometric frame center sits at
``((res - 1) / 2, ...)``.

Angle convention for pan/tilt: azimuth is clockwise from (grid) north, pan is
added to the mount heading, tilt is positive upwards. All wrapped angles live
in ``(-pi, pi]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# WGS-84
WGS84_A = 6378137.0
WGS84_F = 1 / 298.257223563

UTM_K0 = 0.9996
UTM_FALSE_EASTING = 500000.0
UTM_FALSE_NORTHING_SOUTH = 10000000.0
UTM_MAX_ABS_LAT = 84.0


class GeoError(ValueError):
    """Raised for inputs outside the domain of a geometric operation."""


class DegenerateGeometryError(GeoError):
    pass


def _kruger_coefficients(n: float) -> tuple[float, list[float], list[float]]:
    n2, n3, n4, n5, n6 = n**2, n**3, n**4, n**5, n**6
    rect = WGS84_A / (1 + n) * (1 + n2 / 4 + n4 / 64 + n6 / 256)
    alpha = [
        n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800,
        13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360,
        61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440,
        49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600,
        34729 * n5 / 80640 - 3418889 * n6 / 1995840,
        212378941 * n6 / 319334400,
    ]
    beta = [
        n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800,
        n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720,
        17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720,
        4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600,
        4583 * n5 / 161280 - 108847 * n6 / 3991680,
        20648693 * n6 / 638668800,
    ]
    return rect, alpha, beta


_N = WGS84_F / (2 - WGS84_F)
_E = math.sqrt(WGS84_F * (2 - WGS84_F))
_RECT, _ALPHA, _BETA = _kruger_coefficients(_N)


@dataclass(frozen=True)
class GeodeticPosition:
    latitude: float  # degrees
    longitude: float  # degrees
    altitude: float = 0.0  # meters

    def __post_init__(self):
        if not (-90.0 <= self.latitude <= 90.0):
            raise GeoError(f"latitude {self.latitude} outside [-90, 90]")
        if not (-180.0 <= self.longitude < 180.0):
            raise GeoError(f"longitude {self.longitude} outside [-180, 180)")
        if not math.isfinite(self.altitude):
            raise GeoError("altitude must be finite")


@dataclass(frozen=True)
class UtmPosition:
    zone: int
    north: bool
    easting: float
    northing: float
    altitude: float = 0.0


class PixelPoint(NamedTuple):
    x1: float  # column
    x2: float  # row


class NormalizedOffset(NamedTuple):
    w1: float
    w2: float


class MisalignmentAngles(NamedTuple):
    d_phi: float  # pan error, rad
    d_theta: float  # tilt error, rad


class Position3(NamedTuple):
    east: float
    north: float
    up: float


class PtuPose(NamedTuple):
    pan: float
    tilt: float


@dataclass(frozen=True)
class FrameGeometry:
    res_x1: int = 640
    res_x2: int = 480
    center: PixelPoint | None = None

    def __post_init__(self):
        if self.res_x1 <= 0 or self.res_x2 <= 0:
            raise GeoError("frame resolution must be positive")
        if self.center is None:
            object.__setattr__(
                self, "center", PixelPoint((self.res_x1 - 1) / 2, (self.res_x2 - 1) / 2)
            )


@dataclass(frozen=True)
class CameraIntrinsics:
    hfov: float  # rad
    vfov: float  # rad

    def __post_init__(self):
        for name in ("hfov", "vfov"):
            v = getattr(self, name)
            if not (0.0 < v < math.pi):
                raise GeoError(f"{name}={v} outside (0, pi)")

    @classmethod
    def from_hfov(cls, hfov: float, fg: FrameGeometry) -> "CameraIntrinsics":
        """Intrinsics with square pixels for the given frame aspect."""
        vfov = 2 * math.atan(math.tan(hfov / 2) * fg.res_x2 / fg.res_x1)
        return cls(hfov, vfov)


def wrap_angle(a):
    """Wrap to (-pi, pi]. Works on scalars and arrays."""
    w = np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2 * np.pi)
    # mod can round up to exactly 2 pi just above pi
    w = np.where(w <= -np.pi, w + 2 * np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


# --- UTM ---------------------------------------------------------------------

def utm_zone(latitude: float, longitude: float) -> int:
    zone = int((longitude + 180.0) // 6) + 1
    # Norway / Svalbard exceptions
    if 56.0 <= latitude < 64.0 and 3.0 <= longitude < 12.0:
        return 32
    if 72.0 <= latitude <= 84.0 and longitude >= 0.0:
        if longitude < 9.0:
            return 31
        if longitude < 21.0:
            return 33
        if longitude < 33.0:
            return 35
        if longitude < 42.0:
            return 37
    return min(zone, 60)


def central_meridian(zone: int) -> float:
    return (zone - 1) * 6.0 - 180.0 + 3.0


def _forward(lat: float, lon: float, zone: int, north: bool) -> tuple[float, float]:
    phi = math.radians(lat)
    lam = math.radians(lon - central_meridian(zone))
    lam = math.atan2(math.sin(lam), math.cos(lam))
    sphi = math.sin(phi)
    t = math.sinh(math.atanh(sphi) - _E * math.atanh(_E * sphi))
    xi_p = math.atan2(t, math.cos(lam))
    eta_p = math.atanh(math.sin(lam) / math.sqrt(1 + t * t))
    xi, eta = xi_p, eta_p
    for j, a in enumerate(_ALPHA, start=1):
        xi += a * math.sin(2 * j * xi_p) * math.cosh(2 * j * eta_p)
        eta += a * math.cos(2 * j * xi_p) * math.sinh(2 * j * eta_p)
    easting = UTM_FALSE_EASTING + UTM_K0 * _RECT * eta
    northing = UTM_K0 * _RECT * xi + (0.0 if north else UTM_FALSE_NORTHING_SOUTH)
    return easting, northing


def _inverse(easting: float, northing: float, zone: int, north: bool) -> tuple[float, float]:
    xi = (northing - (0.0 if north else UTM_FALSE_NORTHING_SOUTH)) / (UTM_K0 * _RECT)
    eta = (easting - UTM_FALSE_EASTING) / (UTM_K0 * _RECT)
    xi_p, eta_p = xi, eta
    for j, b in enumerate(_BETA, start=1):
        xi_p -= b * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
        eta_p -= b * math.cos(2 * j * xi) * math.sinh(2 * j * eta)
    tau_p = math.sin(xi_p) / math.hypot(math.sinh(eta_p), math.cos(xi_p))
    lam = math.atan2(math.sinh(eta_p), math.cos(xi_p))
    # Newton on tau = tan(phi), Karney (2011)
    tau = tau_p
    for _ in range(8):
        sigma = math.sinh(_E * math.atanh(_E * tau / math.sqrt(1 + tau * tau)))
        tau_i = tau * math.sqrt(1 + sigma * sigma) - sigma * math.sqrt(1 + tau * tau)
        dtau = (
            (tau_p - tau_i)
            / math.sqrt(1 + tau_i * tau_i)
            * (1 + (1 - _E * _E) * tau * tau)
            / ((1 - _E * _E) * math.sqrt(1 + tau * tau))
        )
        tau += dtau
        if abs(dtau) < 1e-15:
            break
    lat = math.degrees(math.atan(tau))
    lon = math.degrees(lam) + central_meridian(zone)
    lon = (lon + 180.0) % 360.0 - 180.0
    return lat, lon


def geodetic_to_utm(
    g: GeodeticPosition, zone: int | None = None, north: bool | None = None
) -> UtmPosition:
    """Project to UTM. ``zone``/``north`` force a grid (used for a shared local frame)."""
    if abs(g.latitude) > UTM_MAX_ABS_LAT:
        raise GeoError(f"latitude {g.latitude} outside the UTM band |lat| <= 84")
    if zone is None:
        zone = utm_zone(g.latitude, g.longitude)
    if north is None:
        north = g.latitude >= 0.0
    e, n = _forward(g.latitude, g.longitude, zone, north)
    return UtmPosition(zone, north, e, n, g.altitude)


def utm_to_geodetic(u: UtmPosition) -> GeodeticPosition:
    lat, lon = _inverse(u.easting, u.northing, u.zone, u.north)
    return GeodeticPosition(lat, lon, u.altitude)


@dataclass(frozen=True)
class LocalFrame:
    """East-North-Up frame anchored at a geodetic origin, on the origin's UTM grid."""

    origin: GeodeticPosition
    _utm: UtmPosition = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_utm", geodetic_to_utm(self.origin))

    @property
    def zone(self) -> int:
        return self._utm.zone

    def to_local(self, g: GeodeticPosition) -> Position3:
        u = geodetic_to_utm(g, zone=self._utm.zone, north=self._utm.north)
        return Position3(
            u.easting - self._utm.easting,
            u.northing - self._utm.northing,
            g.altitude - self.origin.altitude,
        )

    def to_geodetic(self, p) -> GeodeticPosition:
        e, n, up = p
        u = UtmPosition(
            self._utm.zone,
            self._utm.north,
            self._utm.easting + e,
            self._utm.northing + n,
            self.origin.altitude + up,
        )
        return utm_to_geodetic(u)


# --- pixel / angle geometry ---------------------------------------------------

def normalized_offset(p: PixelPoint, fg: FrameGeometry) -> NormalizedOffset:
    return NormalizedOffset(
        (p[0] - fg.center.x1) / fg.res_x1,
        (p[1] - fg.center.x2) / fg.res_x2,
    )


def pixel_from_offset(w: NormalizedOffset, fg: FrameGeometry) -> PixelPoint:
    return PixelPoint(fg.center.x1 + w[0] * fg.res_x1, fg.center.x2 + w[1] * fg.res_x2)


def misalignment_from_offset(w: NormalizedOffset, c: CameraIntrinsics) -> MisalignmentAngles:
    return MisalignmentAngles(
        math.atan(2.0 * w[0] * math.tan(0.5 * c.hfov)),
        math.atan(2.0 * w[1] * math.tan(0.5 * c.vfov)),
    )


def offset_from_misalignment(a: MisalignmentAngles, c: CameraIntrinsics) -> NormalizedOffset:
    return NormalizedOffset(
        math.tan(a[0]) / (2.0 * math.tan(0.5 * c.hfov)),
        math.tan(a[1]) / (2.0 * math.tan(0.5 * c.vfov)),
    )


def boresight(mount_heading: float, pose: PtuPose) -> np.ndarray:
    """Unit vector (ENU) of the PTU's pointing direction."""
    az = mount_heading + pose[0]
    el = pose[1]
    return np.array([math.sin(az) * math.cos(el), math.cos(az) * math.cos(el), math.sin(el)])


def azimuth_elevation(v) -> tuple[float, float]:
    e, n, u = v
    return math.atan2(e, n), math.atan2(u, math.hypot(e, n))


def misalignment_from_positions(
    station: Position3, mount_heading: float, pose: PtuPose, target: Position3
) -> MisalignmentAngles:
    """Pan/tilt error toward ``target`` from GNSS geometry (tilt error positive up)."""
    v = np.subtract(target, station, dtype=float)
    if not np.any(v):
        raise DegenerateGeometryError("target coincides with the station")
    az, el = azimuth_elevation(v)
    return MisalignmentAngles(
        wrap_angle(az - (mount_heading + pose[0])),
        wrap_angle(el - pose[1]),
    )


def camera_axes(mount_heading: float, pose: PtuPose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(right, down, forward) unit vectors of the camera in ENU."""
    az = mount_heading + pose[0]
    el = pose[1]
    sa, ca, se, ce = math.sin(az), math.cos(az), math.sin(el), math.cos(el)
    forward = np.array([sa * ce, ca * ce, se])
    right = np.array([ca, -sa, 0.0])
    down = np.array([sa * se, ca * se, -ce])
    return right, down, forward


def euclidean_distance(a, b) -> float:
    return float(math.dist(a, b))
