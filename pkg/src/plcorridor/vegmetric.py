"""Vegetation encroachment metric around detected power lines.

Per line: sample m+1 evenly spaced points along the oriented box's centerline,
take a Gaussian-weighted greenness (GRVI) profile perpendicular to the line at
each point, reduce it to a greenness index GI = max(W) + mean(W), compute a
tree/grass differentiation index TGDI = log10(edge fraction) * brightness over
a dilated band around the box, and combine them as M = alpha*GI + beta*TGDI
(beta <= 0, so texture-rich dark canopy raises the metric).

Per image: M is the worst (maximum) line metric; an alert fires when
M >= threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imaging import RasterImage, ScalarField, canny_edges, to_grayscale
from .obbgeom import OrientedBox

SEVERITY_LEVELS = ("Low", "Moderate", "Severe", "Critical")


@dataclass(frozen=True)
class GaussianKernel1D:
    """Normalized, symmetric, strictly positive discrete Gaussian."""

    size: int
    sigma: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if abs(w.sum() - 1.0) > 1e-12 or (w <= 0).any():
            raise ValueError("weights must be positive and sum to 1")
        object.__setattr__(self, "weights", w)

    @property
    def half(self) -> int:
        return (self.size - 1) // 2


def gaussian_kernel(z: int, sigma: float) -> GaussianKernel1D:
    """G(g) = exp(-0.5 (g/sigma)^2) normalized over g in {-(z-1)/2 .. (z-1)/2}."""
    if z < 1 or z % 2 == 0:
        raise ValueError("kernel size must be a positive odd integer")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    g = np.arange(z) - (z - 1) / 2
    w = np.exp(-0.5 * (g / sigma) ** 2)
    if w.min() == 0.0:
        raise ValueError("sigma too small for the kernel size: tail weights underflow")
    return GaussianKernel1D(z, sigma, w / w.sum())


def grvi(img: RasterImage) -> ScalarField:
    """Green-red vegetation index (G - R) / (G + R) per pixel, 0 where G + R = 0."""
    if img.channels != 3:
        raise ValueError("GRVI needs an RGB image")
    r = img.pixels[:, :, 0].astype(np.float64)
    g = img.pixels[:, :, 1].astype(np.float64)
    denom = g + r
    out = np.zeros_like(denom)
    np.divide(g - r, denom, out=out, where=denom != 0)
    return ScalarField(out)


def sample_centerline(b: OrientedBox, m: int) -> np.ndarray:
    """m+1 evenly spaced points along the box centerline, shape (m+1, 2).

    Point k sits at (cx, cy) + (-w/2 + k*w/m) * (cos theta, sin theta); the
    first and last points are the segment endpoints. A zero-width box repeats
    its center.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    k = np.arange(m + 1)
    t = -b.w / 2 + k * (b.w / m)
    d = np.array([math.cos(b.theta), math.sin(b.theta)])
    return np.array([b.cx, b.cy]) + np.outer(t, d)


@dataclass(frozen=True)
class LineProfile:
    """Weighted greenness W(k) along a centerline with its sample points."""

    samples: np.ndarray       # (m+1,)
    points: np.ndarray        # (m+1, 2)
    covered: np.ndarray       # (m+1,) bool; False where every tap fell off-image


def _bilinear(values: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    h, w = values.shape
    valid = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    xc = np.clip(xs, 0, w - 1)
    yc = np.clip(ys, 0, h - 1)
    x0 = np.clip(np.floor(xc).astype(int), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(yc).astype(int), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    v = (values[y0, x0] * (1 - fx) * (1 - fy)
         + values[y0, x1] * fx * (1 - fy)
         + values[y1, x0] * (1 - fx) * fy
         + values[y1, x1] * fx * fy)
    return v, valid


def perpendicular_profile(fld: ScalarField, b: OrientedBox,
                          kernel: GaussianKernel1D, m: int) -> LineProfile:
    """Gaussian-weighted field profile perpendicular to the box centerline.

    At each centerline point the kernel is laid out along the unit normal
    (-sin theta, cos theta); taps are read with bilinear interpolation.
    Off-image taps contribute nothing and the remaining weights are
    renormalized; a point whose taps all fall outside gets W(k) = 0 and is
    flagged uncovered.
    """
    pts = sample_centerline(b, m)
    g = np.arange(kernel.size) - kernel.half
    perp = np.array([-math.sin(b.theta), math.cos(b.theta)])
    xs = pts[:, 0][:, None] + g[None, :] * perp[0]
    ys = pts[:, 1][:, None] + g[None, :] * perp[1]
    vals, valid = _bilinear(fld.values, xs, ys)
    w = np.broadcast_to(kernel.weights, vals.shape) * valid
    denom = w.sum(axis=1)
    covered = denom > 0
    samples = np.zeros(len(pts))
    np.divide((vals * w).sum(axis=1), denom, out=samples, where=covered)
    return LineProfile(samples, pts, covered)


def greenness_index(profile: LineProfile | np.ndarray) -> float:
    """GI = max(W) + mean(W); exactly invariant to sample order (fsum)."""
    w = profile.samples if isinstance(profile, LineProfile) else np.asarray(profile)
    if w.size == 0:
        raise ValueError("profile must have at least one sample")
    return float(w.max()) + math.fsum(w) / w.size


@dataclass(frozen=True)
class TgdiResult:
    value: float
    edge_fraction: float
    brightness: float
    defined: bool


def tgdi_from_components(edge_fraction: float, brightness: float,
                         eps: float = 1e-4) -> float:
    """log10(T) * B with T clamped to [eps, 1] and B in [0, 1]; range [-4, 0]."""
    t = min(max(edge_fraction, eps), 1.0)
    return math.log10(t) * brightness


def tgdi(img: RasterImage, region: OrientedBox, margin: float = 32.0,
         canny_low: float = 50.0, canny_high: float = 150.0,
         eps: float = 1e-4) -> TgdiResult:
    """Tree/grass differentiation index over a box dilated by `margin` pixels.

    T is the Canny edge fraction and B the mean grayscale (normalized to
    [0, 1]) over the dilated-box pixels, computed within the region's bounding
    window so edge context stays local. An off-image region yields value 0,
    flagged undefined.
    """
    grown = OrientedBox(region.cx, region.cy, region.w + 2 * margin,
                        region.h + 2 * margin, region.theta)
    corners = grown.corners()
    x0 = max(int(math.floor(corners[:, 0].min())), 0)
    y0 = max(int(math.floor(corners[:, 1].min())), 0)
    x1 = min(int(math.ceil(corners[:, 0].max())) + 1, img.width)
    y1 = min(int(math.ceil(corners[:, 1].max())) + 1, img.height)
    if x1 <= x0 or y1 <= y0:
        return TgdiResult(0.0, 0.0, 0.0, False)
    window = RasterImage(img.pixels[y0:y1, x0:x1])
    gray = to_grayscale(window)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    mask = grown.contains(np.column_stack([xx.ravel(), yy.ravel()]))
    mask = mask.reshape(y1 - y0, x1 - x0)
    count = int(mask.sum())
    if count == 0:
        return TgdiResult(0.0, 0.0, 0.0, False)
    edges, _ = canny_edges(gray, canny_low, canny_high)
    t = float(edges.values[mask].sum()) / count
    b = float(gray.values[mask].mean()) / 255.0
    return TgdiResult(tgdi_from_components(t, b, eps), t, b, True)


def encroachment_metric(gi: float, tgdi_value: float,
                        alpha: float, beta: float) -> float:
    """M = alpha * GI + beta * TGDI; beta must be <= 0."""
    if beta > 0:
        raise ValueError("beta must be non-positive")
    return alpha * gi + beta * tgdi_value


@dataclass
class MetricConfig:
    """Free parameters of the per-line metric, with calibrated defaults."""

    gaussian_size: int = 41
    gaussian_sigma: float = 10.0
    samples_per_line: int = 100
    alpha: float = 0.5
    beta: float = -0.05
    alarm_threshold: float = 0.81
    tgdi_margin: float = 32.0
    canny_low: float = 50.0
    canny_high: float = 150.0
    severity_cuts: tuple | None = None  # (c50, c75, c90)

    def validate(self) -> "MetricConfig":
        gaussian_kernel(self.gaussian_size, self.gaussian_sigma)
        if self.beta > 0:
            raise ValueError("beta must be non-positive")
        if self.samples_per_line < 1:
            raise ValueError("samples_per_line must be at least 1")
        if not (0 <= self.canny_low <= self.canny_high):
            raise ValueError("canny thresholds must satisfy 0 <= low <= high")
        if self.severity_cuts is not None and list(self.severity_cuts) != \
                sorted(self.severity_cuts):
            raise ValueError("severity cuts must be ascending")
        return self


@dataclass
class LineAssessment:
    box: OrientedBox
    profile: LineProfile
    gi: float
    tgdi: TgdiResult
    metric: float


@dataclass
class VegReport:
    """Per-image assessment: one entry per detected line plus the aggregate."""

    image_id: str
    lines: list
    metric: float | None
    alert: bool
    severity: str | None = None
    gps: tuple | None = None

    def worst_line(self) -> LineAssessment | None:
        if not self.lines:
            return None
        return max(self.lines, key=lambda ln: ln.metric)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "gps": list(self.gps) if self.gps else None,
            "metric": self.metric,
            "alert": self.alert,
            "severity": self.severity,
            "lines": [
                {
                    "box": list(ln.box.as_tuple()),
                    "gi": ln.gi,
                    "tgdi": ln.tgdi.value,
                    "edge_fraction": ln.tgdi.edge_fraction,
                    "brightness": ln.tgdi.brightness,
                    "tgdi_defined": ln.tgdi.defined,
                    "metric": ln.metric,
                    "profile": {
                        "max": float(ln.profile.samples.max()),
                        "mean": float(ln.profile.samples.mean()),
                        "samples": ln.profile.samples.tolist(),
                    },
                }
                for ln in self.lines
            ],
        }


def classify_severity(metric: float, cuts: tuple) -> str:
    """Low / Moderate / Severe / Critical by percentile cut points.

    Intervals are right-open except Critical, which is [c90, inf).
    """
    c50, c75, c90 = cuts
    if metric < c50:
        return "Low"
    if metric < c75:
        return "Moderate"
    if metric < c90:
        return "Severe"
    return "Critical"


def analyze_image(img: RasterImage, detections: list, cfg: MetricConfig,
                  image_id: str = "", gps: tuple | None = None) -> VegReport:
    """Assess every detected line and aggregate to an image-level alert.

    `detections` holds OrientedBox values (as read from label files or an
    upstream detector). The image metric is the maximum line metric; with no
    detections it is None and no alert fires. Deterministic for identical
    inputs and config.
    """
    kernel = gaussian_kernel(cfg.gaussian_size, cfg.gaussian_sigma)
    green = grvi(img)
    lines = []
    for box in detections:
        prof = perpendicular_profile(green, box, kernel, cfg.samples_per_line)
        gi = greenness_index(prof)
        tg = tgdi(img, box, cfg.tgdi_margin, cfg.canny_low, cfg.canny_high)
        m = encroachment_metric(gi, tg.value, cfg.alpha, cfg.beta)
        lines.append(LineAssessment(box, prof, gi, tg, m))
    metric = max((ln.metric for ln in lines), default=None)
    alert = metric is not None and metric >= cfg.alarm_threshold
    severity = None
    if metric is not None and cfg.severity_cuts is not None:
        severity = classify_severity(metric, cfg.severity_cuts)
    return VegReport(image_id, lines, metric, alert, severity, gps)
