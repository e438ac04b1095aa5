"""Per-frame drone detection: HSV red mask, DBSCAN, largest cluster, ellipse fit.

Frames are ``(height, width, 3)`` uint8 RGB arrays. Pixel sets are integer
arrays of shape ``(n, 2)`` holding ``(column, row)`` pairs in row-major scan
order.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geo import (
    CameraIntrinsics,
    FrameGeometry,
    NormalizedOffset,
    PixelPoint,
    normalized_offset,
)


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class HsvThresholds:
    # (lo, hi) in degrees; lo > hi wraps through 360
    hue_windows: tuple[tuple[float, float], ...] = ((0.0, 10.0), (350.0, 360.0))
    saturation_min: float = 0.6
    value_min: float = 0.3

    def __post_init__(self):
        if not self.hue_windows:
            raise ValueError("at least one hue window is required")


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 3.0
    min_pts: int = 4

    def __post_init__(self):
        if self.eps <= 0 or self.min_pts < 1:
            raise ValueError("eps must be > 0 and min_pts >= 1")


@dataclass(frozen=True)
class VisionConfig:
    thresholds: HsvThresholds = field(default_factory=HsvThresholds)
    dbscan: DbscanParams = field(default_factory=DbscanParams)
    frame: FrameGeometry = field(default_factory=FrameGeometry)


@dataclass(frozen=True)
class EllipseFit:
    center: PixelPoint
    semi_major: float
    semi_minor: float
    orientation: float  # rad, major axis vs. +column direction

    @property
    def major_diameter(self) -> float:
        return 2.0 * self.semi_major


@dataclass(frozen=True)
class Detection:
    ellipse: EllipseFit
    pixel_count: int
    w: NormalizedOffset


# --- colour ------------------------------------------------------------------

def rgb_to_hsv(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised RGB (uint8, last axis) to hue [deg, 0..360), saturation, value in [0, 1]."""
    c = np.asarray(rgb, dtype=np.float64) / 255.0
    r, g, b = c[..., 0], c[..., 1], c[..., 2]
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    delta = mx - mn
    sat = np.divide(delta, mx, out=np.zeros_like(mx), where=mx > 0)
    safe = np.where(delta > 0, delta, 1.0)
    hue = np.select(
        [delta == 0, mx == r, mx == g],
        [0.0, np.mod((g - b) / safe, 6.0), (b - r) / safe + 2.0],
        default=(r - g) / safe + 4.0,
    )
    return np.mod(hue * 60.0, 360.0), sat, mx


def _in_hue_windows(hue: np.ndarray, windows) -> np.ndarray:
    keep = np.zeros(hue.shape, dtype=bool)
    for lo, hi in windows:
        if lo <= hi:
            keep |= (hue >= lo) & (hue <= hi)
        else:
            keep |= (hue >= lo) | (hue <= hi)
    return keep


@functools.lru_cache(maxsize=8)
def _min_channel_bound(s_min: float) -> np.ndarray:
    """Largest min channel, per max channel value, whose saturation can reach s_min (lenient)."""
    m = np.arange(256, dtype=np.float64)
    return np.floor(m * (1.0 - s_min) + 1e-6).clip(0, 255).astype(np.uint8)


def red_mask(frame: np.ndarray, t: HsvThresholds = HsvThresholds()) -> np.ndarray:
    """Pixels whose HSV colour falls inside the hue windows and saturation/value minima."""
    if frame.ndim != 3 or frame.shape[0] == 0 or frame.shape[1] == 0:
        raise ValueError("frame must be a non-empty (h, w, 3) array")
    # cheap prefilter on value and chroma before the float conversion
    r, g, b = frame[..., 0], frame[..., 1], frame[..., 2]
    mx = np.maximum(np.maximum(r, g), b)
    cand = mx >= math.ceil(t.value_min * 255.0 - 1e-9)
    if t.saturation_min > 0:
        mn = np.minimum(np.minimum(r, g), b)
        cand &= (mn < mx) & (mn <= _min_channel_bound(t.saturation_min)[mx])
    rows, cols = np.divmod(np.flatnonzero(cand), frame.shape[1])
    if rows.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    hue, sat, val = rgb_to_hsv(frame[rows, cols])
    keep = (sat >= t.saturation_min) & (val >= t.value_min) & _in_hue_windows(hue, t.hue_windows)
    return np.column_stack([cols[keep], rows[keep]]).astype(np.int64)


# --- clustering --------------------------------------------------------------

@dataclass
class Clustering:
    points: np.ndarray  # scan-ordered (col, row)
    labels: np.ndarray  # -1 noise, else cluster index
    clusters: list[np.ndarray]
    noise: np.ndarray


def scan_order(ps: np.ndarray) -> np.ndarray:
    ps = np.asarray(ps, dtype=np.int64).reshape(-1, 2)
    return ps[np.lexsort((ps[:, 0], ps[:, 1]))]


def cluster_pixels(ps: np.ndarray, params: DbscanParams = DbscanParams()) -> Clustering:
    """DBSCAN over pixel coordinates.

    Points are visited in row-major order, so clusters are numbered by their
    first core point. Expansion finishes one cluster before the next starts,
    hence a border point reachable from several clusters joins the one with
    the lowest number. That makes the result equal to: connected components
    of the core-core graph, plus each border point attached to its
    lowest-numbered adjacent component.
    """
    pts = scan_order(ps)
    n = len(pts)
    if n == 0:
        return Clustering(pts, np.empty(0, dtype=np.int64), [], pts)
    pairs = cKDTree(pts.astype(np.float64)).query_pairs(params.eps, output_type="ndarray")
    i, j = pairs[:, 0], pairs[:, 1]
    degree = np.bincount(np.concatenate([i, j]), minlength=n) + 1  # self-inclusive
    core = degree >= params.min_pts

    labels = np.full(n, -1, dtype=np.int64)
    cc = core[i] & core[j]
    core_idx = np.flatnonzero(core)
    if core_idx.size:
        pos = np.full(n, -1, dtype=np.int64)
        pos[core_idx] = np.arange(core_idx.size)
        g = coo_matrix(
            (np.ones(int(cc.sum())), (pos[i[cc]], pos[j[cc]])), shape=(core_idx.size, core_idx.size)
        )
        _, comp = connected_components(g, directed=False)
        # renumber components by their first core point in scan order
        first = np.full(comp.max() + 1, n, dtype=np.int64)
        np.minimum.at(first, comp, core_idx)
        rank = np.empty_like(first)
        rank[np.argsort(first, kind="stable")] = np.arange(first.size)
        labels[core_idx] = rank[comp]
        # border points: lowest adjacent cluster number
        a = np.concatenate([i, j])
        b = np.concatenate([j, i])
        m = core[a] & ~core[b]
        border = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(border, b[m], labels[a[m]])
        hit = border != np.iinfo(np.int64).max
        labels[hit] = border[hit]
        n_clusters = first.size
    else:
        n_clusters = 0

    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    bounds = np.searchsorted(sorted_labels, np.arange(n_clusters + 1))
    clusters = [pts[np.sort(order[bounds[c]:bounds[c + 1]])] for c in range(n_clusters)]
    return Clustering(pts, labels, clusters, pts[labels == -1])


def select_drone_cluster(clusters) -> np.ndarray | None:
    """Largest cluster; ties go to the smallest centroid (row, then column)."""
    best, best_key = None, None
    for c in clusters:
        if len(c) == 0:
            continue
        centroid = c.mean(axis=0)
        key = (-len(c), centroid[1], centroid[0])
        if best_key is None or key < best_key:
            best, best_key = c, key
    return best


# --- ellipse fitting ---------------------------------------------------------

def fit_conic(points) -> tuple[np.ndarray, np.ndarray, float]:
    """Direct least-squares ellipse-specific conic fit.

    Works in mean-centred, scaled coordinates and solves the constrained
    problem (4AC - B^2 = 1) through the reduced 3x3 eigenproblem of the
    partitioned scatter matrix. Returns ``(coeffs, mean, scale)`` where the
    conic ``A x^2 + B xy + C y^2 + D x + E y + F = 0`` holds for
    ``(p - mean) / scale``.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(p) < 5:
        raise DegenerateInputError(f"need at least 5 points, got {len(p)}")
    mean = p.mean(axis=0)
    q = p - mean
    scale = math.sqrt((q**2).sum(axis=1).mean() / 2.0)
    if scale == 0.0:
        raise DegenerateInputError("all points coincide")
    x, y = q[:, 0] / scale, q[:, 1] / scale

    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1, s2, s3 = d1.T @ d1, d1.T @ d2, d2.T @ d2
    if np.linalg.cond(s3) > 1e12:
        raise DegenerateInputError("degenerate scatter (collinear points)")
    t = -np.linalg.solve(s3, s2.T)
    m = s1 + s2 @ t
    # C1^-1 @ m with C1 = [[0, 0, 2], [0, -1, 0], [2, 0, 0]]
    m = np.array([m[2] / 2.0, -m[1], m[0] / 2.0])
    vals, vecs = np.linalg.eig(m)
    vecs = np.real(vecs)
    cond = 4.0 * vecs[0] * vecs[2] - vecs[1] ** 2
    ok = np.flatnonzero(cond > 0)
    if ok.size == 0:
        raise DegenerateInputError("no ellipse-specific solution")
    k = ok[np.argmin(np.abs(np.real(vals[ok])))]
    a1 = vecs[:, k] / math.sqrt(cond[k])
    return np.concatenate([a1, t @ a1]), mean, scale


def conic_to_ellipse(coeffs) -> tuple[float, float, float, float, float]:
    """(cx, cy, semi_major, semi_minor, orientation) of an ellipse conic."""
    a, b, c, d, e, f = coeffs
    den = 4 * a * c - b * b
    if den <= 0:
        raise DegenerateInputError("conic is not an ellipse")
    cx = (b * e - 2 * c * d) / den
    cy = (b * d - 2 * a * e) / den
    f0 = f + (d * cx + e * cy) / 2.0
    lam, vec = np.linalg.eigh(np.array([[a, b / 2], [b / 2, c]]))
    axes2 = -f0 / lam
    if np.any(axes2 <= 0):
        raise DegenerateInputError("imaginary ellipse")
    # eigh sorts ascending -> the first eigenvalue gives the major axis
    major, minor = math.sqrt(axes2[0]), math.sqrt(axes2[1])
    if lam[0] < 0:
        major, minor = minor, major
        vmaj = vec[:, 1]
    else:
        vmaj = vec[:, 0]
    theta = math.atan2(vmaj[1], vmaj[0])
    theta = (theta + math.pi / 2) % math.pi - math.pi / 2
    return cx, cy, major, minor, theta


def fit_ellipse(points) -> EllipseFit:
    coeffs, mean, scale = fit_conic(points)
    cx, cy, major, minor, theta = conic_to_ellipse(coeffs)
    return EllipseFit(
        PixelPoint(cx * scale + mean[0], cy * scale + mean[1]),
        major * scale,
        minor * scale,
        theta,
    )


def _fallback_fit(cluster: np.ndarray) -> EllipseFit:
    c = cluster.astype(np.float64)
    centroid = c.mean(axis=0)
    extent = c.max(axis=0) - c.min(axis=0) + 1.0
    horizontal = extent[0] >= extent[1]
    return EllipseFit(
        PixelPoint(*centroid),
        float(extent.max()) / 2.0,
        float(extent.min()) / 2.0,
        0.0 if horizontal else math.pi / 2,
    )


def detect(frame: np.ndarray, cfg: VisionConfig = VisionConfig()) -> Detection | None:
    ps = red_mask(frame, cfg.thresholds)
    if len(ps) == 0:
        return None
    cluster = select_drone_cluster(cluster_pixels(ps, cfg.dbscan).clusters)
    if cluster is None:
        return None
    try:
        ell = fit_ellipse(cluster)
        lo, hi = cluster.min(axis=0), cluster.max(axis=0)
        # a fit centre outside the blob means the conic went astray
        if not (lo[0] - 0.5 <= ell.center[0] <= hi[0] + 0.5 and lo[1] - 0.5 <= ell.center[1] <= hi[1] + 0.5):
            ell = _fallback_fit(cluster)
    except (DegenerateInputError, np.linalg.LinAlgError):
        ell = _fallback_fit(cluster)
    return Detection(ell, len(cluster), normalized_offset(ell.center, cfg.frame))


# --- zoom --------------------------------------------------------------------

class ZoomCommand(enum.Enum):
    IN = "in"
    OUT = "out"
    HOLD = "hold"


@dataclass(frozen=True)
class ZoomPolicy:
    lower_px: float = 20.0
    upper_px: float = 120.0
    dwell: float = 0.5  # s between zoom changes
    steps: int = 12
    max_zoom: float = 12.0

    def __post_init__(self):
        if not self.lower_px < self.upper_px:
            raise ValueError("lower_px must be below upper_px")

    def zoom_at(self, step: int) -> float:
        if self.steps == 1:
            return 1.0
        return 1.0 + (self.max_zoom - 1.0) * step / (self.steps - 1)


@dataclass(frozen=True)
class ZoomState:
    step: int = 0
    last_change: float = -math.inf
    zoom: float = 1.0


def zoom_step(det: Detection | None, z: ZoomState, policy: ZoomPolicy, now: float = math.inf) -> ZoomCommand:
    if now - z.last_change < policy.dwell:
        return ZoomCommand.HOLD
    at_max = z.step >= policy.steps - 1
    at_min = z.step <= 0
    if det is None:
        return ZoomCommand.HOLD if at_min else ZoomCommand.OUT
    size = det.ellipse.major_diameter
    if size < policy.lower_px and not at_max:
        return ZoomCommand.IN
    if size > policy.upper_px and not at_min:
        return ZoomCommand.OUT
    return ZoomCommand.HOLD


def apply_zoom(z: ZoomState, cmd: ZoomCommand, policy: ZoomPolicy, now: float) -> ZoomState:
    if cmd is ZoomCommand.HOLD:
        return z
    step = z.step + (1 if cmd is ZoomCommand.IN else -1)
    step = min(max(step, 0), policy.steps - 1)
    if step == z.step:
        return z
    return ZoomState(step, now, policy.zoom_at(step))


def fov_for_zoom(zoom: float, base: CameraIntrinsics) -> CameraIntrinsics:
    """Focal-length-proportional FOV: tan(fov/2) scales with 1/zoom."""
    if not 1.0 <= zoom <= 12.0:
        raise ValueError(f"zoom {zoom} outside [1, 12]")
    return CameraIntrinsics(
        2.0 * math.atan(math.tan(base.hfov / 2.0) / zoom),
        2.0 * math.atan(math.tan(base.vfov / 2.0) / zoom),
    )
