"""Synthetic corridor imagery for tests, demos, and calibration.

Line images emulate conductors: thin dashed strokes (specular glint and
occlusion make real conductors appear segmented). Scene fixtures pair a
gray-background image holding one horizontal line with a speckled green
vegetation blob either touching the line (encroached) or far from it
(control).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .imaging import RasterImage
from .obbgeom import OrientedBox


def line_image(size: int, angle_deg: float, center: tuple, thickness: float = 1.0,
               fg: int = 255, bg: int = 0, dash_period: float = 0.0,
               dash_phase: float = 0.0, dash_duty: float = 0.5) -> RasterImage:
    """Grayscale-as-RGB image holding one straight line through `center`.

    `dash_period` 0 draws a solid line; otherwise on/off segments of the given
    period (pixels along the line) and duty cycle.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    th = math.radians(angle_deg)
    cx, cy = center
    across = -(xx - cx) * math.sin(th) + (yy - cy) * math.cos(th)
    on = np.abs(across) <= thickness / 2
    if dash_period > 0:
        along = (xx - cx) * math.cos(th) + (yy - cy) * math.sin(th)
        on &= ((along / dash_period + dash_phase) % 1.0) < dash_duty
    gray = np.where(on, np.uint8(fg), np.uint8(bg))
    return RasterImage(np.repeat(gray[:, :, None], 3, axis=2))


def dashed_line_image(size: int, angle_deg: float, center: tuple,
                      phase: float = 0.0) -> RasterImage:
    """Conductor-style dashed line: thickness 1 px, dash period 6 px, duty 0.5."""
    return line_image(size, angle_deg, center, thickness=1.0,
                      dash_period=6.0, dash_phase=phase)


def strip_polygon(p0: tuple, p1: tuple, half_width: float) -> np.ndarray:
    """4-vertex polygon of a thick segment from p0 to p1."""
    a = np.asarray(p0, dtype=np.float64)
    b = np.asarray(p1, dtype=np.float64)
    d = b - a
    norm = np.hypot(*d)
    if norm == 0:
        raise ValueError("segment must have positive length")
    perp = np.array([-d[1], d[0]]) / norm * half_width
    return np.array([a + perp, b + perp, b - perp, a - perp])


def corridor_scene(size: int, line_box: OrientedBox, blob_center: tuple,
                   blob_radius: float, rng: np.random.Generator,
                   bg_gray: int = 128) -> RasterImage:
    """Gray scene with one dark conductor and one speckled green blob."""
    img = np.full((size, size, 3), bg_gray, dtype=np.uint8)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    bx, by = blob_center
    dist2 = (xx - bx) ** 2 + (yy - by) ** 2
    blob = dist2 <= blob_radius ** 2
    speckle = rng.uniform(0.6, 1.0, size=(size, size))
    img[blob, 0] = (40 * speckle[blob]).astype(np.uint8)
    img[blob, 1] = (90 + 110 * speckle[blob]).astype(np.uint8)
    img[blob, 2] = (40 * speckle[blob]).astype(np.uint8)

    cos_t, sin_t = math.cos(line_box.theta), math.sin(line_box.theta)
    dx = xx - line_box.cx
    dy = yy - line_box.cy
    along = dx * cos_t + dy * sin_t
    across = -dx * sin_t + dy * cos_t
    line = (np.abs(along) <= line_box.w / 2) & (np.abs(across) <= line_box.h / 2)
    img[line] = (30, 30, 30)
    return RasterImage(img)


def dense_canopy_scene(size: int, line_box: OrientedBox,
                       rng: np.random.Generator, coverage: float = 0.97,
                       bg_gray: int = 150) -> RasterImage:
    """Lush speckled canopy blanketing most of the conductor corridor.

    The canopy is a band of vividly green foliage overlapping the line along
    `coverage` of its length; with default metric coefficients this scene
    scores around 0.85, inside the observed high-encroachment band.
    """
    img = np.full((size, size, 3), bg_gray, dtype=np.uint8)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    cos_t, sin_t = math.cos(line_box.theta), math.sin(line_box.theta)
    dx = xx - line_box.cx
    dy = yy - line_box.cy
    along = dx * cos_t + dy * sin_t
    across = -dx * sin_t + dy * cos_t
    reach = 26.0 + 4.0 * np.sin(along / 23.0) + rng.uniform(-2, 2, (size, size))
    band = (np.abs(along) <= coverage * line_box.w / 2) & (np.abs(across) <= reach)
    speckle = rng.uniform(0.0, 1.0, size=(size, size))
    img[band, 0] = (8 + 10 * speckle[band]).astype(np.uint8)
    img[band, 1] = (200 + 35 * speckle[band]).astype(np.uint8)
    img[band, 2] = (8 + 10 * speckle[band]).astype(np.uint8)
    line = (np.abs(along) <= line_box.w / 2) & (np.abs(across) <= line_box.h / 2)
    img[line] = (30, 30, 30)
    return RasterImage(img)


def paired_fixture(size: int, seed: int, far_offset: float = 200.0):
    """(encroached image, control image, line box) sharing geometry and seed.

    The encroached scene has its blob touching the conductor; the control
    scene moves the same blob `far_offset` pixels away perpendicular to it.
    """
    rng = np.random.default_rng(seed)
    cy = size / 2 + rng.uniform(-20, 20)
    line = OrientedBox(size / 2, cy, size * 0.7, 3.0, 0.0)
    radius = rng.uniform(12, 18)
    bx = rng.uniform(size * 0.3, size * 0.7)
    near = (bx, cy + radius * 0.5)
    far = (bx, cy + far_offset)
    rng_near = np.random.default_rng(seed + 1)
    rng_far = np.random.default_rng(seed + 1)
    return (corridor_scene(size, line, near, radius, rng_near),
            corridor_scene(size, line, far, radius, rng_far),
            line)


def write_fixture_set(out_dir: str | Path, n_pairs: int = 2, size: int = 640,
                      seed: int = 7, gps_base: tuple = (41.87, -87.65)) -> dict:
    """Write paired fixture images, OBB labels, and GPS sidecars to disk.

    Layout: images/<name>.png, labels/<name>.txt, images/<name>.gps.json.
    Returns a manifest dict (also written as fixtures.json).
    """
    from .dataset import write_obb_labels

    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n_pairs):
        enc, ctl, line = paired_fixture(size, seed + 17 * i)
        for kind, img in (("encroached", enc), ("control", ctl)):
            name = f"{kind}_{i:02d}"
            img.to_file(out / "images" / f"{name}.png")
            write_obb_labels([("cable", line)], out / "labels" / f"{name}.txt",
                             (size, size))
            gps = (gps_base[0] + 0.001 * i, gps_base[1] - 0.001 * i)
            (out / "images" / f"{name}.gps.json").write_text(
                json.dumps({"lat": gps[0], "lon": gps[1]}))
            entries.append({"name": name, "kind": kind, "gps": list(gps)})
    manifest = {"size": size, "seed": seed, "entries": entries}
    (out / "fixtures.json").write_text(json.dumps(manifest, indent=2))
    return manifest
