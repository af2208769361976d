"""Image preprocessing primitives: grayscale, equalization, integral images.

All functions operate on plain numpy arrays. Grayscale images are 2-D uint8
arrays indexed [y, x]; integral images are 2-D int64 arrays of the same shape
holding inclusive prefix sums, so rectangle sums come out integer-exact.
"""

import numpy as np

from .errors import DimensionError

__all__ = [
    "to_grayscale",
    "equalize_histogram",
    "integral_image",
    "box_sum",
    "box_sum_clamped",
    "zero_guarded",
]


def _round_half_up(x):
    return np.floor(x + 0.5)


def _check_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise DimensionError(f"expected non-empty 2-D grayscale image, got shape {img.shape}")
    return img


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Convert an 8-bit RGB raster (H, W, 3) to a single luminance channel.

    Uses the BT.601 weights 0.299/0.587/0.114 with half-up rounding, so an
    input with R == G == B == v maps every pixel back to v exactly.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] < 1 or image.shape[1] < 1:
        raise DimensionError(f"expected non-empty (H, W, 3) RGB image, got shape {image.shape}")
    rgb = image.astype(np.float64)
    gray = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return np.clip(_round_half_up(gray), 0, 255).astype(np.uint8)


def equalize_histogram(img: np.ndarray) -> np.ndarray:
    """Globally equalize an 8-bit grayscale image.

    The mapping is v -> round((cdf(v) - cdf_min) / (N - cdf_min) * 255) where
    cdf counts pixels with value <= v and cdf_min is the smallest nonzero cdf
    entry. It is monotone in v and sends the highest occupied bin to 255.
    A single-bin (constant) image degenerates to all-255 output.
    """
    img = _check_gray(img)
    if img.dtype != np.uint8:
        raise DimensionError(f"expected uint8 image, got dtype {img.dtype}")
    hist = np.bincount(img.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    n = img.size
    cdf_min = cdf[np.nonzero(hist)[0][0]]
    denom = n - cdf_min
    if denom == 0:
        return np.full_like(img, 255)
    lut = _round_half_up((cdf - cdf_min) / denom * 255.0)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[img]


def integral_image(img: np.ndarray) -> np.ndarray:
    """Summed-area table: out[y, x] = sum of img over [0..y] x [0..x], exactly.

    int64 accumulation never overflows for 8-bit images up to 4096 x 4096.
    """
    img = _check_gray(img)
    return img.astype(np.int64).cumsum(axis=0).cumsum(axis=1)


def zero_guarded(ii: np.ndarray) -> np.ndarray:
    """Integral image padded with a zero row/column on top/left.

    With S = zero_guarded(ii), the sum over rows [r0, r1) x cols [c0, c1) is
    S[r1, c1] - S[r0, c1] - S[r1, c0] + S[r0, c0] with no boundary cases,
    which is the form the vectorized detectors use.
    """
    return np.pad(ii, ((1, 0), (1, 0)))


def box_sum(ii: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> int:
    """Exact sum of the source image over the inclusive rectangle [x0..x1] x [y0..y1].

    Coordinates must lie inside the image; x0 > x1 or y0 > y1 is an error.
    Computed from four integral-image lookups with out-of-range guard terms
    treated as zero.
    """
    h, w = ii.shape
    if x1 < x0 or y1 < y0:
        raise ValueError(f"inverted rectangle ({x0},{y0})..({x1},{y1})")
    if x0 < 0 or y0 < 0 or x1 >= w or y1 >= h:
        raise ValueError(f"rectangle ({x0},{y0})..({x1},{y1}) outside {w}x{h} image")
    total = int(ii[y1, x1])
    if x0 > 0:
        total -= int(ii[y1, x0 - 1])
    if y0 > 0:
        total -= int(ii[y0 - 1, x1])
    if x0 > 0 and y0 > 0:
        total += int(ii[y0 - 1, x0 - 1])
    return total


def box_sum_clamped(ii: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> int:
    """Like box_sum but with coordinates clamped to the image borders.

    Regions hanging outside the image contribute zero, matching the behavior
    box filters need near borders. An empty intersection sums to zero.
    """
    h, w = ii.shape
    if x1 < x0 or y1 < y0:
        raise ValueError(f"inverted rectangle ({x0},{y0})..({x1},{y1})")
    x0, x1 = max(x0, 0), min(x1, w - 1)
    y0, y1 = max(y0, 0), min(y1, h - 1)
    if x0 > x1 or y0 > y1:
        return 0
    return box_sum(ii, x0, y0, x1, y1)
