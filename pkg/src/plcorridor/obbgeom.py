"""Oriented-box geometry: convex hull, min-area rectangle, clipping, exact rotated IoU.

Polygons are (k, 2) float arrays of (x, y) vertices, counterclockwise in the
algebraic sense (positive shoelace sum); with image y pointing down that
renders visually clockwise. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SQUARE_TOL = 1e-9


@dataclass
class OrientedBox:
    """Rotated rectangle (cx, cy, w, h, theta), theta in radians.

    Canonical form is enforced on construction: w >= h >= 0, theta folded into
    (-pi/2, pi/2] (near-square boxes additionally fold theta into [0, pi/2),
    where the two parameterizations are geometrically identical).
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError("box extents must be non-negative")
        if self.h > self.w:
            self.w, self.h = self.h, self.w
            self.theta += math.pi / 2
        self.theta = self.theta - math.pi * math.floor(
            (self.theta + math.pi / 2) / math.pi)
        if self.theta <= -math.pi / 2:
            self.theta += math.pi
        if abs(self.w - self.h) <= _SQUARE_TOL * max(self.w, 1.0):
            self.theta %= math.pi / 2

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> np.ndarray:
        """Four corners, counterclockwise, centered on (cx, cy)."""
        d = np.array([math.cos(self.theta), math.sin(self.theta)])
        p = np.array([-d[1], d[0]])
        a = 0.5 * self.w * d
        b = 0.5 * self.h * p
        c = np.array([self.cx, self.cy])
        return np.array([c + a + b, c - a + b, c - a - b, c + a - b])

    def contains(self, points: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Boolean mask of points within the box grown by `margin` on each side."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dx = pts[:, 0] - self.cx
        dy = pts[:, 1] - self.cy
        cos_t, sin_t = math.cos(self.theta), math.sin(self.theta)
        along = dx * cos_t + dy * sin_t
        across = -dx * sin_t + dy * cos_t
        return (np.abs(along) <= self.w / 2 + margin) & \
               (np.abs(across) <= self.h / 2 + margin)

    def as_tuple(self) -> tuple:
        return (self.cx, self.cy, self.w, self.h, self.theta)


def signed_area(poly: np.ndarray) -> float:
    """Shoelace sum / 2; positive for algebraically counterclockwise rings."""
    p = np.asarray(poly, dtype=np.float64)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_area(poly: np.ndarray) -> float:
    return abs(signed_area(poly))


def convex_hull(points) -> np.ndarray:
    """Counterclockwise convex hull by monotone chain; collinear points dropped.

    Degenerate inputs yield fewer than 3 vertices: one vertex when all points
    coincide, two (the extreme pair) when all points are collinear.
    """
    pts = np.unique(np.asarray(points, dtype=np.float64).reshape(-1, 2), axis=0)
    if len(pts) == 0:
        raise ValueError("need at least one point")
    if len(pts) == 1:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.asarray(lower[:-1] + upper[:-1])
    return hull


def min_area_rect(points) -> OrientedBox:
    """Minimum-area enclosing rectangle by rotating calipers over hull edges.

    One rectangle side is collinear with a hull edge. Collinear input
    degenerates to a zero-height box along the point span; a single point
    gives a zero box.
    """
    hull = convex_hull(points)
    if len(hull) == 1:
        return OrientedBox(hull[0, 0], hull[0, 1], 0.0, 0.0, 0.0)
    if len(hull) == 2:
        d = hull[1] - hull[0]
        c = hull.mean(axis=0)
        return OrientedBox(c[0], c[1], float(np.hypot(*d)), 0.0,
                           math.atan2(d[1], d[0]))
    edges = np.roll(hull, -1, axis=0) - hull
    best = None
    for e in edges:
        norm = np.hypot(e[0], e[1])
        if norm == 0.0:
            continue
        u = e / norm
        r = np.array([-u[1], u[0]])
        xs = hull @ u
        ys = hull @ r
        w = xs.max() - xs.min()
        h = ys.max() - ys.min()
        area = w * h
        if best is None or area < best[0]:
            cx_loc = 0.5 * (xs.max() + xs.min())
            cy_loc = 0.5 * (ys.max() + ys.min())
            center = cx_loc * u + cy_loc * r
            best = (area, center, w, h, math.atan2(u[1], u[0]))
    _, center, w, h, theta = best
    return OrientedBox(center[0], center[1], float(w), float(h), theta)


def obb_to_corners(b: OrientedBox) -> np.ndarray:
    """Corner polygon of a box, counterclockwise."""
    return b.corners()


def _clip_halfplane(poly: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Keep the part of poly on or left of directed edge a->b."""
    if len(poly) == 0:
        return poly
    ex, ey = b[0] - a[0], b[1] - a[1]
    side = ex * (poly[:, 1] - a[1]) - ey * (poly[:, 0] - a[0])
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        p, q = poly[i], poly[j]
        sp, sq = side[i], side[j]
        if sp >= 0:
            out.append(p)
        if (sp > 0 and sq < 0) or (sp < 0 and sq > 0):
            t = sp / (sp - sq)
            out.append(p + t * (q - p))
    return np.asarray(out) if out else np.empty((0, 2))


def clip_convex(subject: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon by a counterclockwise convex window."""
    poly = np.asarray(subject, dtype=np.float64)
    win = np.asarray(window, dtype=np.float64)
    if signed_area(win) < 0:
        win = win[::-1]
    for i in range(len(win)):
        poly = _clip_halfplane(poly, win[i], win[(i + 1) % len(win)])
        if len(poly) == 0:
            break
    return poly


def clip_polygon(subject: np.ndarray, window: tuple) -> np.ndarray:
    """Clip a polygon to an axis-aligned rectangle (x0, y0, x1, y1)."""
    x0, y0, x1, y1 = window
    if x1 <= x0 or y1 <= y0:
        raise ValueError("window must be non-empty")
    rect = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=np.float64)
    return clip_convex(subject, rect)


def rotated_iou(a: OrientedBox, b: OrientedBox) -> float:
    """Exact intersection-over-union of two rotated rectangles, in [0, 1].

    Computed by convex clipping + shoelace. Operands are ordered canonically
    first, so the result is exactly symmetric. Two zero-area boxes give 0.
    """
    if b.as_tuple() < a.as_tuple():
        a, b = b, a
    area_a, area_b = a.area, b.area
    if area_a == 0.0 and area_b == 0.0:
        return 0.0
    inter = polygon_area(clip_convex(a.corners(), b.corners()))
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)
