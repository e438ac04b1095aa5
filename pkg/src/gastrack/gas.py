"""Gas fields, open-path beam integrals and the TDLAS sensor model."""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .geo import DegenerateGeometryError, GeodeticPosition


class GasModelError(ValueError):
    pass


class StatusCode(enum.Enum):
    OK = "OK"
    WARN_LOW_SIGNAL = "WARN_LOW_SIGNAL"
    WARN_HIGH_TRANSMISSION = "WARN_HIGH_TRANSMISSION"
    ERROR_NO_SIGNAL = "ERROR_NO_SIGNAL"
    ERROR_LIGHT_POLLUTION = "ERROR_LIGHT_POLLUTION"

    @property
    def is_valid(self) -> bool:
        return not self.name.startswith("ERROR")


# --- fields ------------------------------------------------------------------

class GasField:
    """Concentration u*(x, t) in ppm. Subclasses evaluate ``(n, 3)`` point arrays."""

    def concentration(self, points: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self, a: np.ndarray, b: np.ndarray) -> list[float]:
        """Beam parameters in (0, 1) where the integrand is not smooth."""
        return []


def concentration_at(f: GasField, x, t: float = 0.0) -> float:
    return float(f.concentration(np.asarray(x, dtype=float).reshape(1, 3), t)[0])


@dataclass(frozen=True)
class UniformField(GasField):
    background: float = 400.0

    def __post_init__(self):
        if self.background < 0:
            raise GasModelError("background must be nonnegative")

    def concentration(self, points, t):
        return np.full(len(points), self.background, dtype=float)


LITERS_PER_MINUTE = 1e-3 / 60.0  # m^3/s


@dataclass(frozen=True)
class GaussianPlumeField(GasField):
    """Steady Gaussian plume with ground reflection; excess concentration in ppm by volume.

    Dispersion follows power laws ``sigma = sqrt(s0^2 + (a x^b)^2)`` in the
    downwind distance ``x`` (Pasquill-Gifford class D by default); ``s0``
    is the initial spread at the release point.
    """

    source: tuple[float, float, float] = (0.0, -16.0, 1.5)
    emission_rate: float = 25.0  # L/min
    wind: tuple[float, float] = (0.0, -2.0)  # (east, north) m/s
    sigma_y: tuple[float, float] = (0.08, 0.9)
    sigma_z: tuple[float, float] = (0.06, 1.0)
    initial_sigma: float = 0.3

    def __post_init__(self):
        if math.hypot(*self.wind) == 0.0:
            raise GasModelError("plume needs a nonzero wind speed")
        if self.emission_rate < 0 or self.initial_sigma <= 0:
            raise GasModelError("emission rate must be >= 0 and initial_sigma > 0")

    @property
    def wind_speed(self) -> float:
        return math.hypot(*self.wind)

    @property
    def q_ppm(self) -> float:
        """Volume flux in ppm * m^3/s."""
        return self.emission_rate * LITERS_PER_MINUTE * 1e6

    def sigmas(self, x):
        x = np.asarray(x, dtype=float)
        ay, by = self.sigma_y
        az, bz = self.sigma_z
        s0 = self.initial_sigma
        return np.hypot(s0, ay * x**by), np.hypot(s0, az * x**bz)

    def _axes(self, points):
        u = self.wind_speed
        we, wn = self.wind[0] / u, self.wind[1] / u
        rel = np.asarray(points, dtype=float) - np.asarray(self.source, dtype=float)
        downwind = rel[:, 0] * we + rel[:, 1] * wn
        crosswind = -rel[:, 0] * wn + rel[:, 1] * we
        return downwind, crosswind

    def concentration(self, points, t):
        points = np.asarray(points, dtype=float)
        x, y = self._axes(points)
        z = points[:, 2]
        h = self.source[2]
        out = np.zeros(len(points))
        down = x > 0
        if not np.any(down):
            return out
        x, y, z = x[down], y[down], z[down]
        sy, sz = self.sigmas(x)
        vertical = np.exp(-((z - h) ** 2) / (2 * sz**2)) + np.exp(-((z + h) ** 2) / (2 * sz**2))
        out[down] = self.q_ppm / (2 * math.pi * self.wind_speed * sy * sz) * np.exp(-(y**2) / (2 * sy**2)) * vertical
        return out

    def breakpoints(self, a, b):
        # the plume switches on where the beam crosses the source's crosswind plane
        (da, db), _ = self._axes(np.vstack([a, b]))
        out = []
        if da != db:
            s = da / (da - db)
            if 0.0 < s < 1.0:
                out.append(float(s))
        # closest approach to the source, where the near field peaks
        v = np.subtract(b, a)
        s = float(np.dot(np.subtract(self.source, a), v) / np.dot(v, v))
        if 0.0 < s < 1.0:
            out.append(s)
        return out


@dataclass(frozen=True)
class SumField(GasField):
    fields: tuple[GasField, ...] = ()

    def concentration(self, points, t):
        total = np.zeros(len(points))
        for f in self.fields:
            total += f.concentration(points, t)
        return total

    def breakpoints(self, a, b):
        return sorted({s for f in self.fields for s in f.breakpoints(a, b)})


# --- quadrature --------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 nodes in [-1, 1]
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG7 = np.zeros(15)
_WG7[[1, 3, 5]] = _WG[:3]
_WG7[[13, 11, 9]] = _WG[:3]
_WG7[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureParams:
    tol: float = 1e-10  # relative
    abs_tol: float = 1e-12
    initial_intervals: int = 16
    max_intervals: int = 4000


def _gk15(func, lo: np.ndarray, hi: np.ndarray):
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    s = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    fx = func(s).reshape(len(lo), 15)
    k = half * (fx @ _WK15)
    g = half * (fx @ _WG7)
    return k, np.abs(k - g)


def adaptive_integrate(func, a: float, b: float, q: QuadratureParams = QuadratureParams(), breaks=()) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod (7-15) on [a, b]; ``func`` maps arrays to arrays."""
    edges = np.unique(np.concatenate([
        np.linspace(a, b, q.initial_intervals + 1),
        [s for s in breaks if a < s < b],
    ]))
    lo, hi = edges[:-1], edges[1:]
    k, err = _gk15(func, lo, hi)
    heap = [(-e, l, h, v) for e, l, h, v in zip(err, lo, hi, k)]
    heapq.heapify(heap)
    total, total_err = float(k.sum()), float(err.sum())
    while total_err > max(q.tol * abs(total), q.abs_tol) and len(heap) < q.max_intervals:
        neg_e, l, h, v = heapq.heappop(heap)
        m = 0.5 * (l + h)
        k2, e2 = _gk15(func, np.array([l, m]), np.array([m, h]))
        total += float(k2.sum()) - v
        total_err += float(e2.sum()) + neg_e
        heapq.heappush(heap, (-e2[0], l, m, k2[0]))
        heapq.heappush(heap, (-e2[1], m, h, k2[1]))
    return total, total_err


def beam_integral(f: GasField, x_tdlas, x_drone, t: float = 0.0, q: QuadratureParams = QuadratureParams()) -> float:
    """Open-path column in ppm*m: path length times the mean of u* along the beam."""
    a = np.asarray(x_tdlas, dtype=float)
    b = np.asarray(x_drone, dtype=float)
    v = b - a
    d = float(np.linalg.norm(v))
    if d == 0.0:
        raise DegenerateGeometryError("beam endpoints coincide")

    def integrand(s):
        return f.concentration(a[None, :] + s[:, None] * v[None, :], t)

    value, _ = adaptive_integrate(integrand, 0.0, 1.0, q, f.breakpoints(a, b))
    return d * value


# --- sensor ------------------------------------------------------------------

@dataclass(frozen=True)
class SensorModel:
    max_range: float = 60.0  # m
    reflector_radius: float = 0.125  # m
    beam_divergence: float = 0.002  # rad, 1/e^2 footprint radius per meter
    warn_fraction: float = 0.8
    overexposure_distance: float = 3.0  # m
    noise_sd: float = 5.0  # ppm*m
    extinction: float = 1e-3  # 1/m, one-way

    def __post_init__(self):
        if not 0.0 < self.warn_fraction < 1.0:
            raise GasModelError("warn_fraction must lie in (0, 1)")
        if self.reflector_radius <= 0 or self.beam_divergence <= 0 or self.max_range <= 0:
            raise GasModelError("reflector_radius, beam_divergence, max_range must be positive")
        if self.noise_sd < 0 or self.extinction < 0:
            raise GasModelError("noise_sd and extinction must be nonnegative")

    @property
    def validity_threshold(self) -> float:
        """Signal of a perfectly aligned reflector at max range."""
        return link_budget(self.max_range, 0.0, self)

    @property
    def warn_threshold(self) -> float:
        return link_budget(self.warn_fraction * self.max_range, 0.0, self)


def link_budget(d: float, lateral_miss: float, s: SensorModel) -> float:
    """Returned signal strength in [0, 1].

    Fraction of a Gaussian beam (1/e^2 radius ``d * divergence``) landing on
    the reflector disc, times two-way extinction, times ``(max_range/d)^2``
    capped at 1. Zero once the footprint disc no longer touches the reflector.
    """
    if d <= 0:
        raise GasModelError("distance must be positive")
    footprint = d * s.beam_divergence
    miss = abs(lateral_miss)
    if miss >= s.reflector_radius + footprint:
        return 0.0
    sigma = footprint / 2.0
    r2 = (s.reflector_radius / sigma) ** 2
    if miss == 0.0:
        hit = -math.expm1(-r2 / 2.0)
    else:
        hit = float(stats.ncx2.cdf(r2, 2, (miss / sigma) ** 2))
    return hit * math.exp(-2.0 * s.extinction * d) * min(1.0, (s.max_range / d) ** 2)


@dataclass(frozen=True)
class MeasurementRecord:
    t: float
    m: float  # ppm*m, nan for ERROR records
    status: StatusCode
    signal_strength: float
    tdlas_position: GeodeticPosition | None = None


def beam_geometry(x_tdlas, x_reflector, beam_direction) -> tuple[float, float]:
    """(distance, lateral miss) of the reflector relative to the beam axis."""
    v = np.subtract(x_reflector, x_tdlas, dtype=float)
    d = float(np.linalg.norm(v))
    b = np.asarray(beam_direction, dtype=float)
    b = b / np.linalg.norm(b)
    along = float(v @ b)
    if along <= 0:
        return d, math.inf
    return d, float(np.linalg.norm(v - along * b))


def classify(d: float, strength: float, s: SensorModel, sun_in_view: bool = False) -> StatusCode:
    if sun_in_view:
        return StatusCode.ERROR_LIGHT_POLLUTION
    if strength <= 0.0 or d > s.max_range:
        return StatusCode.ERROR_NO_SIGNAL
    if d < s.overexposure_distance:
        return StatusCode.WARN_HIGH_TRANSMISSION
    if strength < s.warn_threshold:
        return StatusCode.WARN_LOW_SIGNAL
    return StatusCode.OK


def tdlas_measure(
    s: SensorModel,
    f: GasField,
    x_tdlas,
    x_reflector,
    beam_direction,
    t: float,
    rng: np.random.Generator | None = None,
    sun_in_view: bool = False,
    tdlas_position: GeodeticPosition | None = None,
    q: QuadratureParams = QuadratureParams(),
) -> MeasurementRecord:
    d, miss = beam_geometry(x_tdlas, x_reflector, beam_direction)
    strength = 0.0 if d == 0.0 or not math.isfinite(miss) else link_budget(d, miss, s)
    status = classify(d, strength, s, sun_in_view)
    if not status.is_valid:
        return MeasurementRecord(t, math.nan, status, strength, tdlas_position)
    m = beam_integral(f, x_tdlas, x_reflector, t, q)
    if s.noise_sd > 0 and rng is not None:
        m += rng.normal(0.0, s.noise_sd)
    return MeasurementRecord(t, max(m, 0.0), status, strength, tdlas_position)
