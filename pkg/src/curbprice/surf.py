"""Box-filter blob detection and local descriptors over integral images.

The detector scores each location with an integer-approximated determinant of
the Hessian computed from rectangular filters (three box sums per second
derivative), scans a small pyramid of filter sizes, and keeps 3x3x3 local
maxima refined to sub-pixel position and scale. Keypoints then get a dominant
orientation and a 64-dimensional descriptor built from Haar wavelet responses
in a 4x4 grid of subregions.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, CurbpriceError
from .imgproc import zero_guarded

__all__ = [
    "SurfParams",
    "InterestPoint",
    "ResponseMap",
    "MarginError",
    "octave_filter_sizes",
    "hessian_response_map",
    "detect_interest_points",
    "assign_orientation",
    "compute_descriptor",
    "describe_interest_points",
    "detect_and_describe",
    "strongest_n",
]

# Smallest filter is 9 px; its scale in pixels.
BASE_FILTER = 9
SCALE_PER_FILTER_PX = 1.2 / BASE_FILTER

# Relative weight of the off-diagonal term in the determinant.
DXY_WEIGHT = 0.9

ORIENTATION_SECTOR = math.pi / 3
ORIENTATION_SECTOR_STEP = 0.15


class MarginError(CurbpriceError):
    """Keypoint sits too close to the image border for the requested window."""


@dataclass
class SurfParams:
    """Detector knobs. The threshold applies to area-normalized responses."""

    hessian_threshold: float = 600.0
    octaves: int = 4
    upright: bool = False
    init_step: int = 2

    def __post_init__(self):
        if not 1 <= self.octaves <= 4:
            raise ConfigError(f"octaves must be in [1, 4], got {self.octaves}")
        if self.hessian_threshold < 0:
            raise ConfigError("hessian_threshold must be >= 0")
        if self.init_step < 1:
            raise ConfigError("init_step must be >= 1")


@dataclass
class InterestPoint:
    """A detected keypoint; orientation/descriptor are filled in later stages."""

    x: float
    y: float
    scale: float
    response: float
    laplacian_sign: int
    orientation: float = 0.0
    descriptor: np.ndarray | None = None


@dataclass
class ResponseMap:
    """Hessian responses sampled on a regular grid for one filter size."""

    width: int
    height: int
    filter_size: int
    sampling_step: int
    values: np.ndarray
    trace_signs: np.ndarray = field(repr=False, default=None)
    empty: bool = False


def octave_filter_sizes(octaves: int) -> list[list[int]]:
    """Filter-size schedule per octave: [9,15,21,27], [15,27,39,51], [27,51,75,99], ...

    Each octave quadruples the size increment of the previous one's start and
    doubles the in-octave spacing.
    """
    if not 1 <= octaves <= 4:
        raise ConfigError(f"octaves must be in [1, 4], got {octaves}")
    schedule = []
    start, inc = BASE_FILTER, 6
    for _ in range(octaves):
        schedule.append([start + k * inc for k in range(4)])
        start += inc
        inc *= 2
    return schedule


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def _rect_sums(S, r0, c0, h, w):
    """Vectorized clamped sums over half-open boxes rows [r0, r0+h) x cols [c0, c0+w)."""
    hh, ww = S.shape[0] - 1, S.shape[1] - 1
    r1 = np.clip(r0 + h, 0, hh)
    c1 = np.clip(c0 + w, 0, ww)
    r0 = np.clip(r0, 0, hh)
    c0 = np.clip(c0, 0, ww)
    return S[r1, c1] - S[r0, c1] - S[r1, c0] + S[r0, c0]


def hessian_response_map(ii: np.ndarray, filter_size: int, sampling_step: int) -> ResponseMap:
    """Determinant-of-Hessian responses for one filter size on a step grid.

    Responses are computed only where the full filter window fits; border grid
    entries stay zero. Each second-derivative estimate is divided by the
    filter area before combining, so responses are comparable across sizes:
    det = Dxx * Dyy - (0.9 * Dxy)^2.
    """
    if filter_size < BASE_FILTER or filter_size % 2 == 0 or filter_size % 3 != 0:
        raise ConfigError(f"filter size must be odd, >= 9 and divisible by 3, got {filter_size}")
    if sampling_step < 1:
        raise ConfigError("sampling_step must be >= 1")
    h, w = ii.shape
    gw, gh = w // sampling_step, h // sampling_step
    values = np.zeros((gh, gw))
    signs = np.zeros((gh, gw), dtype=np.int8)
    border = (filter_size - 1) // 2
    lobe = filter_size // 3
    if w < filter_size or h < filter_size or gw == 0 or gh == 0:
        return ResponseMap(gw, gh, filter_size, sampling_step, values, signs, empty=True)

    # Grid indices whose image coordinate keeps the whole window inside.
    gxs = np.arange(gw)
    gys = np.arange(gh)
    gxs = gxs[(gxs * sampling_step >= border) & (gxs * sampling_step <= w - 1 - border)]
    gys = gys[(gys * sampling_step >= border) & (gys * sampling_step <= h - 1 - border)]
    if gxs.size == 0 or gys.size == 0:
        return ResponseMap(gw, gh, filter_size, sampling_step, values, signs, empty=True)

    S = zero_guarded(ii)
    ys = (gys * sampling_step)[:, None]
    xs = (gxs * sampling_step)[None, :]
    half_lobe = (lobe - 1) // 2

    def rect(dy, dx, bh, bw):
        return _rect_sums(S, ys + dy, xs + dx, bh, bw)

    dxx = (rect(-lobe + 1, -border, 2 * lobe - 1, filter_size)
           - 3 * rect(-lobe + 1, -half_lobe, 2 * lobe - 1, lobe))
    dyy = (rect(-border, -lobe + 1, filter_size, 2 * lobe - 1)
           - 3 * rect(-half_lobe, -lobe + 1, lobe, 2 * lobe - 1))
    dxy = (rect(-lobe, 1, lobe, lobe) + rect(1, -lobe, lobe, lobe)
           - rect(-lobe, -lobe, lobe, lobe) - rect(1, 1, lobe, lobe))

    inv_area = 1.0 / (filter_size * filter_size)
    dxx = dxx * inv_area
    dyy = dyy * inv_area
    dxy = dxy * inv_area

    det = dxx * dyy - (DXY_WEIGHT * dxy) ** 2
    values[np.ix_(gys, gxs)] = det
    signs[np.ix_(gys, gxs)] = np.where(dxx + dyy >= 0, 1, -1).astype(np.int8)
    return ResponseMap(gw, gh, filter_size, sampling_step, values, signs)


def _interpolate_extremum(stack, t, gy, gx):
    """One quadratic refinement step in (x, y, layer); None if it diverges."""
    d = stack
    gx_ = (d[t, gy, gx + 1] - d[t, gy, gx - 1]) / 2.0
    gy_ = (d[t, gy + 1, gx] - d[t, gy - 1, gx]) / 2.0
    gs_ = (d[t + 1, gy, gx] - d[t - 1, gy, gx]) / 2.0
    v = d[t, gy, gx]
    dxx = d[t, gy, gx + 1] - 2 * v + d[t, gy, gx - 1]
    dyy = d[t, gy + 1, gx] - 2 * v + d[t, gy - 1, gx]
    dss = d[t + 1, gy, gx] - 2 * v + d[t - 1, gy, gx]
    dxy = (d[t, gy + 1, gx + 1] - d[t, gy + 1, gx - 1]
           - d[t, gy - 1, gx + 1] + d[t, gy - 1, gx - 1]) / 4.0
    dxs = (d[t + 1, gy, gx + 1] - d[t + 1, gy, gx - 1]
           - d[t - 1, gy, gx + 1] + d[t - 1, gy, gx - 1]) / 4.0
    dys = (d[t + 1, gy + 1, gx] - d[t + 1, gy - 1, gx]
           - d[t - 1, gy + 1, gx] + d[t - 1, gy - 1, gx]) / 4.0
    grad = np.array([gx_, gy_, gs_])
    hess = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
    try:
        offset = -np.linalg.solve(hess, grad)
    except np.linalg.LinAlgError:
        return None
    if np.max(np.abs(offset)) > 0.5:
        return None
    refined = v + 0.5 * float(grad @ offset)
    return offset, refined


def detect_interest_points(ii: np.ndarray, params: SurfParams) -> list[InterestPoint]:
    """Detect blob keypoints: thresholded 3x3x3 response maxima, sub-pixel refined.

    Within each octave the four maps share one sampling step (doubling per
    octave); only the two middle filter sizes can host maxima. Candidates
    whose refinement offset exceeds half a grid cell are dropped. The result
    order is a deterministic function of the image and parameters.
    """
    points: list[InterestPoint] = []
    for octave, sizes in enumerate(octave_filter_sizes(params.octaves)):
        step = params.init_step * (1 << octave)
        maps = [hessian_response_map(ii, f, step) for f in sizes]
        if any(m.empty for m in maps):
            continue
        gh, gw = maps[0].values.shape
        if gh < 3 or gw < 3:
            continue
        stack = np.stack([m.values for m in maps])
        filter_step = sizes[1] - sizes[0]
        for t in (1, 2):
            center = stack[t, 1:-1, 1:-1]
            others = np.full_like(center, -np.inf)
            for dt in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        if dt == dy == dx == 0:
                            continue
                        view = stack[t + dt, 1 + dy:gh - 1 + dy, 1 + dx:gw - 1 + dx]
                        np.maximum(others, view, out=others)
            mask = (center >= params.hessian_threshold) & (center > others)
            for cy, cx in np.argwhere(mask):
                gy, gx = cy + 1, cx + 1
                hit = _interpolate_extremum(stack, t, gy, gx)
                if hit is None:
                    continue
                offset, refined = hit
                if refined < params.hessian_threshold:
                    continue
                size = sizes[t] + offset[2] * filter_step
                points.append(InterestPoint(
                    x=float((gx + offset[0]) * step),
                    y=float((gy + offset[1]) * step),
                    scale=float(SCALE_PER_FILTER_PX * size),
                    response=float(refined),
                    laplacian_sign=int(maps[t].trace_signs[gy, gx]),
                ))
    return points


def _haar_x(S, rows, cols, size):
    half = size // 2
    right = _rect_sums(S, rows - half, cols, size, half)
    left = _rect_sums(S, rows - half, cols - half, size, half)
    return (right - left).astype(np.float64)


def _haar_y(S, rows, cols, size):
    half = size // 2
    bottom = _rect_sums(S, rows, cols - half, half, size)
    top = _rect_sums(S, rows - half, cols - half, half, size)
    return (bottom - top).astype(np.float64)


def _orientation(S, shape, p: InterestPoint) -> float:
    h, w = shape
    margin = 6.0 * p.scale
    if not (margin <= p.x <= w - 1 - margin and margin <= p.y <= h - 1 - margin):
        raise MarginError(
            f"point ({p.x:.1f}, {p.y:.1f}) scale {p.scale:.2f} too close to border "
            f"for orientation window in {w}x{h} image")
    s = max(1, int(_round_half_up(p.scale)))
    xc = int(_round_half_up(p.x))
    yc = int(_round_half_up(p.y))

    ij = np.arange(-6, 7)
    gi, gj = np.meshgrid(ij, ij, indexing="ij")
    inside = gi * gi + gj * gj < 36
    gi, gj = gi[inside], gj[inside]
    weights = np.exp(-(gi * gi + gj * gj) / (2.0 * 2.5 ** 2))
    rows = yc + gj * s
    cols = xc + gi * s
    res_x = weights * _haar_x(S, rows, cols, 4 * s)
    res_y = weights * _haar_y(S, rows, cols, 4 * s)
    angles = np.mod(np.arctan2(res_y, res_x), 2 * math.pi)

    best_norm2 = -1.0
    best_angle = 0.0
    for start in np.arange(0.0, 2 * math.pi, ORIENTATION_SECTOR_STEP):
        delta = np.mod(angles - start, 2 * math.pi)
        sel = (delta > 0) & (delta < ORIENTATION_SECTOR)
        sx = float(res_x[sel].sum())
        sy = float(res_y[sel].sum())
        norm2 = sx * sx + sy * sy
        if norm2 > best_norm2:
            best_norm2 = norm2
            best_angle = math.atan2(sy, sx) % (2 * math.pi)
    return best_angle


def assign_orientation(ii: np.ndarray, p: InterestPoint) -> float:
    """Dominant gradient direction from Haar responses on a radius-6s disc.

    Responses (wavelet side 4s, Gaussian weight sigma = 2.5s) are swept by a
    pi/3 sector; the sector whose summed response vector is longest gives the
    angle. Raises MarginError when the sampling disc does not fit.
    """
    return _orientation(zero_guarded(ii), ii.shape, p)


def _descriptor(S, shape, p: InterestPoint, upright: bool) -> np.ndarray:
    h, w = shape
    theta = 0.0 if upright else p.orientation
    co, si = math.cos(theta), math.sin(theta)
    extent = 10.0 * p.scale * (abs(co) + abs(si))
    if not (extent <= p.x <= w - 1 - extent and extent <= p.y <= h - 1 - extent):
        raise MarginError(
            f"point ({p.x:.1f}, {p.y:.1f}) scale {p.scale:.2f} too close to border "
            f"for descriptor window in {w}x{h} image")
    s_int = max(1, int(_round_half_up(p.scale)))

    # 20 x 20 sample lattice in the rotated frame, 5 x 5 per subregion.
    grid = (np.arange(20) + 0.5 - 10.0) * p.scale
    u, v = np.meshgrid(grid, grid, indexing="ij")
    sx = _round_half_up(p.x + u * co - v * si)
    sy = _round_half_up(p.y + u * si + v * co)
    rx = _haar_x(S, sy, sx, 2 * s_int)
    ry = _haar_y(S, sy, sx, 2 * s_int)
    du = rx * co + ry * si
    dv = -rx * si + ry * co
    g = np.exp(-(u * u + v * v) / (2.0 * (3.3 * p.scale) ** 2))
    du *= g
    dv *= g

    blocks_du = du.reshape(4, 5, 4, 5)
    blocks_dv = dv.reshape(4, 5, 4, 5)
    parts = np.stack([
        blocks_du.sum(axis=(1, 3)),
        blocks_dv.sum(axis=(1, 3)),
        np.abs(blocks_du).sum(axis=(1, 3)),
        np.abs(blocks_dv).sum(axis=(1, 3)),
    ], axis=-1)
    desc = parts.reshape(-1)
    norm = np.linalg.norm(desc)
    if norm == 0.0:
        return desc
    return desc / norm


def compute_descriptor(ii: np.ndarray, p: InterestPoint, upright: bool = False) -> np.ndarray:
    """64-value descriptor from Haar responses over a 20s window at the keypoint.

    The window is split into 4x4 subregions of 5x5 samples (wavelet side 2s,
    one shared Gaussian weight sigma = 3.3s); each subregion contributes
    (sum dx, sum dy, sum |dx|, sum |dy|) in the oriented frame. The result is
    L2-normalized, except an all-zero response (flat patch) which is returned
    as the zero vector for the caller to flag. Raises MarginError when the
    oriented window does not fit.
    """
    return _descriptor(zero_guarded(ii), ii.shape, p, upright)


def describe_interest_points(
    ii: np.ndarray,
    points: list[InterestPoint],
    upright: bool = False,
) -> tuple[list[InterestPoint], list[tuple[InterestPoint, str]]]:
    """Fill orientation + descriptor for each point; report the ones dropped.

    Returns (kept, dropped) where dropped pairs each discarded point with the
    reason: "orientation-margin", "descriptor-margin", or "degenerate" (flat
    patch producing a zero descriptor). Kept descriptors have unit norm.
    """
    S = zero_guarded(ii)
    kept: list[InterestPoint] = []
    dropped: list[tuple[InterestPoint, str]] = []
    for p in points:
        if not upright:
            try:
                p.orientation = _orientation(S, ii.shape, p)
            except MarginError:
                dropped.append((p, "orientation-margin"))
                continue
        try:
            desc = _descriptor(S, ii.shape, p, upright)
        except MarginError:
            dropped.append((p, "descriptor-margin"))
            continue
        if not desc.any():
            dropped.append((p, "degenerate"))
            continue
        p.descriptor = desc
        kept.append(p)
    return kept, dropped


def detect_and_describe(
    ii: np.ndarray,
    params: SurfParams,
) -> tuple[list[InterestPoint], list[tuple[InterestPoint, str]]]:
    """Detection followed by description; the usual entry point for pipelines."""
    points = detect_interest_points(ii, params)
    return describe_interest_points(ii, points, upright=params.upright)


def strongest_n(points: list[InterestPoint], n: int) -> list[InterestPoint]:
    """The n highest-response points, deterministically ordered.

    Sort key: response descending, then scale descending, then y, then x
    ascending, so ties never depend on detection order.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    ranked = sorted(points, key=lambda p: (-p.response, -p.scale, p.y, p.x))
    return ranked[:n]
