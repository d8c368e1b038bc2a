"""Pixel-level primitives: image IO, grayscale conversion, 2D convolution, Canny edges.

Images are 8-bit arrays wrapped in :class:`RasterImage`; every derived quantity
lives in a float64 :class:`ScalarField`. Convolution uses the correlation
convention (kernels applied as-is, never flipped) with zero padding at the
borders. The Canny detector pads by reflection internally so uniform images
produce no border edges.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

GRAY_WEIGHTS = (0.299, 0.587, 0.114)

DEFAULT_CANNY_LOW = 50.0
DEFAULT_CANNY_HIGH = 150.0

_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_SOBEL_Y = _SOBEL_X.T


@dataclass(frozen=True)
class RasterImage:
    """8-bit image; pixels shaped (H, W) for grayscale or (H, W, 3) for RGB."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            px = px.astype(np.uint8)
        if px.ndim == 3 and px.shape[2] == 1:
            px = px[:, :, 0]
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise ValueError(f"expected (H, W) or (H, W, 3) pixels, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    @classmethod
    def from_file(cls, path: str | Path) -> "RasterImage":
        with Image.open(path) as im:
            mode = "L" if im.mode in ("L", "1", "I;16") else "RGB"
            return cls(np.asarray(im.convert(mode)))

    def to_file(self, path: str | Path) -> None:
        Image.fromarray(self.pixels).save(path)


@dataclass(frozen=True)
class ScalarField:
    """Row-major float64 per-pixel values; all entries finite."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"expected a 2D field, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def to_grayscale(img: RasterImage) -> ScalarField:
    """Luma 0.299 R + 0.587 G + 0.114 B in [0, 255], unrounded.

    Single-channel input passes through unchanged (as floats).
    """
    if img.channels == 1:
        return ScalarField(img.pixels.astype(np.float64))
    r, g, b = (img.pixels[:, :, c].astype(np.float64) for c in range(3))
    wr, wg, wb = GRAY_WEIGHTS
    return ScalarField(wr * r + wg * g + wb * b)


def correlate_array(values: np.ndarray, weights: np.ndarray, pad: str = "zero") -> np.ndarray:
    """Same-size 2D correlation of a raw array; pad is "zero" or "reflect"."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError("kernel must be 2D")
    rh, rw = w.shape[0] // 2, w.shape[1] // 2
    if pad == "zero":
        padded = np.pad(values, ((rh, rh), (rw, rw)))
    else:
        mode = "reflect" if min(values.shape) > max(rh, rw) else "edge"
        padded = np.pad(values, ((rh, rh), (rw, rw)), mode=mode)
    out = np.zeros(values.shape, dtype=np.float64)
    h, wd = values.shape
    for a in range(w.shape[0]):
        for b in range(w.shape[1]):
            c = w[a, b]
            if c != 0.0:
                out += c * padded[a:a + h, b:b + wd]
    return out


def convolve2d(field: ScalarField, kernel) -> ScalarField:
    """Apply an odd square kernel with zero padding; output has the input's size.

    Correlation convention: the kernel is not flipped, so directional kernels
    keep their stated orientation. `kernel` may be a raw array or anything
    with a `.weights` array (e.g. filterbank kernels).
    """
    w = np.asarray(getattr(kernel, "weights", kernel), dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
        raise ValueError("kernel must be square with odd side length")
    return ScalarField(correlate_array(field.values, w, pad="zero"))


def _gaussian_taps(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    g = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    return g / g.sum()


def _smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    taps = _gaussian_taps(sigma)
    out = correlate_array(values, taps[np.newaxis, :], pad="reflect")
    return correlate_array(out, taps[:, np.newaxis], pad="reflect")


def _nms(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin gradient ridges to single-pixel width.

    Direction bins come from sign-canonicalized (gx, gy) ratio comparisons, so
    the result is exactly invariant under value inversion of the input. Ties
    along a plateau break strictly toward the increasing-index neighbor.
    """
    flip = (gx < 0) | ((gx == 0) & (gy < 0))
    cx = np.where(flip, -gx, gx)
    cy = np.where(flip, -gy, gy)
    t_low = np.tan(np.radians(22.5))
    t_high = np.tan(np.radians(67.5))
    acy = np.abs(cy)
    horiz = acy <= t_low * cx
    vert = acy > t_high * cx
    diag_dn = ~horiz & ~vert & (cy > 0)   # gradient toward down-right
    diag_up = ~horiz & ~vert & (cy <= 0)  # gradient toward up-right

    p = np.pad(mag, 1)

    def nb(dr, dc):
        return p[1 + dr:1 + dr + mag.shape[0], 1 + dc:1 + dc + mag.shape[1]]

    keep = np.zeros(mag.shape, dtype=bool)
    keep |= horiz & (mag >= nb(0, -1)) & (mag > nb(0, 1))
    keep |= vert & (mag >= nb(-1, 0)) & (mag > nb(1, 0))
    keep |= diag_dn & (mag >= nb(-1, -1)) & (mag > nb(1, 1))
    keep |= diag_up & (mag >= nb(1, -1)) & (mag > nb(-1, 1))
    out = np.where(keep, mag, 0.0)
    out[0, :] = out[-1, :] = 0.0
    out[:, 0] = out[:, -1] = 0.0
    return out


def _dilate(mask: np.ndarray) -> np.ndarray:
    p = np.pad(mask, 1)
    out = np.zeros(mask.shape, dtype=bool)
    h, w = mask.shape
    for dr in (0, 1, 2):
        for dc in (0, 1, 2):
            out |= p[dr:dr + h, dc:dc + w]
    return out


def canny_edges(field: ScalarField, low: float = DEFAULT_CANNY_LOW,
                high: float = DEFAULT_CANNY_HIGH) -> tuple[ScalarField, float]:
    """Canny edge detection; returns (binary edge field, edge-pixel fraction T).

    Pipeline: Gaussian smoothing (sigma 1.0), Sobel gradients, non-maximum
    suppression, and double-threshold hysteresis. Thresholds apply to the raw
    Sobel gradient magnitude of 0-255 inputs (OpenCV-style scale). T is the
    number of edge pixels divided by all pixels, in [0, 1].
    """
    if not (0 <= low <= high):
        raise ValueError("thresholds must satisfy 0 <= low <= high")
    v = field.values
    if v.shape[0] < 3 or v.shape[1] < 3:
        return ScalarField(np.zeros_like(v)), 0.0
    sm = _smooth(v, 1.0)
    gx = correlate_array(sm, _SOBEL_X, pad="reflect")
    gy = correlate_array(sm, _SOBEL_Y, pad="reflect")
    mag = np.hypot(gx, gy)
    thin = _nms(mag, gx, gy)
    strong = thin >= high
    candidates = thin >= low
    edges = strong
    while True:
        grown = _dilate(edges) & candidates
        if grown.sum() == edges.sum():
            break
        edges = grown
    t = float(edges.sum()) / edges.size
    return ScalarField(edges.astype(np.float64)), t
