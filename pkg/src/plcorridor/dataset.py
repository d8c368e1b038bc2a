"""Dataset preprocessing: segmentation polygons to oriented boxes, frame tiling, splits.

Annotations follow the COCO layout: ``images[]`` entries with id/file_name and
pixel dimensions (plus an optional ``gps: [lat, lon]``), ``annotations[]``
entries whose ``segmentation`` holds flat [x0, y0, x1, y1, ...] rings, and
``categories[]`` mapping ids to names. Only the power-line class ("cable" by
default) is kept.

Label files are plain text, one box per line::

    <class> x1 y1 x2 y2 x3 y3 x4 y4 [score]

with corner coordinates normalized to [0, 1] by the image (tile) dimensions.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imaging import RasterImage
from .obbgeom import OrientedBox, clip_polygon, convex_hull, min_area_rect, polygon_area

logger = logging.getLogger(__name__)

DEFAULT_KEEP_CLASSES = ("cable",)
DEFAULT_TILE_SIZE = 640


@dataclass
class AnnotatedImage:
    image_path: str
    width: int
    height: int
    instances: list  # (class_name, polygon (k, 2) ndarray)
    gps: tuple | None = None

    @property
    def parent_id(self) -> str:
        return Path(self.image_path).stem


@dataclass
class TilePolicy:
    tile_size: int = DEFAULT_TILE_SIZE
    drop_empty: bool = True
    min_clip_area: float = 1e-9


@dataclass
class TileRecord:
    parent_id: str
    origin: tuple  # (x0, y0) pixels in the parent frame
    size: int
    labels: list  # (class_name, OrientedBox) in tile-local coordinates

    @property
    def tile_id(self) -> str:
        return f"{self.parent_id}_x{self.origin[0]}_y{self.origin[1]}"


def _rings(segmentation) -> list:
    if isinstance(segmentation, list) and segmentation and \
            isinstance(segmentation[0], (int, float)):
        return [segmentation]
    return list(segmentation or [])


def parse_annotations(path: str | Path,
                      keep_classes=DEFAULT_KEEP_CLASSES) -> list[AnnotatedImage]:
    """Load COCO-style annotations, keeping only the requested classes.

    Images without kept instances are retained with empty instance lists.
    Rings with an odd coordinate count are skipped with a warning. Points are
    clamped to the image rectangle. Multi-ring segmentations are merged into
    their convex hull.
    """
    doc = json.loads(Path(path).read_text())
    cat_names = {c["id"]: c["name"] for c in doc.get("categories", [])}
    images = {}
    for entry in doc.get("images", []):
        gps = entry.get("gps")
        images[entry["id"]] = AnnotatedImage(
            image_path=entry.get("file_name", str(entry["id"])),
            width=int(entry["width"]),
            height=int(entry["height"]),
            instances=[],
            gps=tuple(gps) if gps else None,
        )
    for ann in doc.get("annotations", []):
        name = cat_names.get(ann.get("category_id"))
        if name not in keep_classes:
            continue
        img = images.get(ann.get("image_id"))
        if img is None:
            logger.warning("annotation %s references unknown image", ann.get("id"))
            continue
        pts = []
        bad = False
        for ring in _rings(ann.get("segmentation")):
            if len(ring) % 2 != 0 or len(ring) < 6:
                bad = True
                break
            pts.extend(zip(ring[0::2], ring[1::2]))
        if bad or not pts:
            logger.warning("skipping malformed polygon in annotation %s", ann.get("id"))
            continue
        poly = np.asarray(pts, dtype=np.float64)
        poly[:, 0] = np.clip(poly[:, 0], 0, img.width)
        poly[:, 1] = np.clip(poly[:, 1], 0, img.height)
        if len(_rings(ann.get("segmentation"))) > 1:
            poly = convex_hull(poly)
        img.instances.append((name, poly))
    return [images[k] for k in sorted(images)]


def polygon_to_obb(poly: np.ndarray) -> OrientedBox:
    """Minimum-area oriented box of a polygon's convex hull; encloses every point."""
    return min_area_rect(poly)


def grid_anchors(extent: int, tile: int) -> list[int]:
    """Tile anchor offsets covering [0, extent]; the last anchor overlaps backward
    when the extent is not a multiple of the tile size."""
    if extent <= tile:
        return [0]
    xs = list(range(0, extent - tile + 1, tile))
    if xs[-1] + tile < extent:
        xs.append(extent - tile)
    return xs


def tile_image(img: AnnotatedImage, policy: TilePolicy | None = None) -> list[TileRecord]:
    """Cut a frame into square tiles and regenerate per-tile oriented-box labels.

    Each instance polygon is clipped to each tile rectangle; non-empty clips
    become min-area boxes in tile-local coordinates. Tiles without labels are
    dropped when the policy says so. Frames smaller than the tile yield one
    tile anchored at the origin with unclipped labels (padding happens when
    pixels are materialized).
    """
    policy = policy or TilePolicy()
    t = policy.tile_size
    if img.width < t or img.height < t:
        labels = [(name, polygon_to_obb(poly)) for name, poly in img.instances]
        rec = TileRecord(img.parent_id, (0, 0), t, labels)
        return [rec] if (labels or not policy.drop_empty) else []
    records = []
    for y0 in grid_anchors(img.height, t):
        for x0 in grid_anchors(img.width, t):
            labels = []
            for name, poly in img.instances:
                clipped = clip_polygon(poly, (x0, y0, x0 + t, y0 + t))
                if len(clipped) < 3 or polygon_area(clipped) < policy.min_clip_area:
                    continue
                local = clipped - np.array([x0, y0], dtype=np.float64)
                labels.append((name, polygon_to_obb(local)))
            if labels or not policy.drop_empty:
                records.append(TileRecord(img.parent_id, (x0, y0), t, labels))
    return records


def crop_tile(raster: RasterImage, rec: TileRecord) -> RasterImage:
    """Extract a tile's pixels, zero-padding when the frame is smaller."""
    t = rec.size
    x0, y0 = rec.origin
    px = raster.pixels
    window = px[y0:y0 + t, x0:x0 + t]
    if window.shape[0] == t and window.shape[1] == t:
        return RasterImage(window.copy())
    shape = (t, t) if px.ndim == 2 else (t, t, px.shape[2])
    out = np.zeros(shape, dtype=np.uint8)
    out[:window.shape[0], :window.shape[1]] = window
    return RasterImage(out)


def split_dataset(records: list[TileRecord], ratios=(8, 1, 1),
                  seed: int = 0) -> tuple[list, list, list]:
    """Deterministic train/val/test split at parent-image granularity.

    Parents are shuffled by the seed and allocated by the normalized ratios
    (largest-remainder rounding), so tiles of one frame never straddle splits.
    """
    total = float(sum(ratios))
    if total <= 0:
        raise ValueError("ratios must sum to a positive value")
    fracs = [r / total for r in ratios]
    parents = sorted({r.parent_id for r in records})
    rng = random.Random(seed)
    rng.shuffle(parents)
    n = len(parents)
    counts = [int(f * n) for f in fracs]
    remainders = [f * n - c for f, c in zip(fracs, counts)]
    for _ in range(n - sum(counts)):
        idx = max(range(len(fracs)), key=lambda i: (remainders[i], -i))
        counts[idx] += 1
        remainders[idx] = -1.0
    assignment = {}
    start = 0
    for split_idx, c in enumerate(counts):
        for p in parents[start:start + c]:
            assignment[p] = split_idx
        start += c
    out = ([], [], [])
    for rec in records:
        out[assignment[rec.parent_id]].append(rec)
    return out


def write_obb_labels(labels: list, path: str | Path, size: tuple) -> None:
    """Write (class, OrientedBox[, score]) labels normalized by (width, height).

    Out-of-range normalized corner values are clamped to [0, 1] with a warning
    (a min-area box of a clipped polygon may overhang its tile).
    """
    sx, sy = float(size[0]), float(size[1])
    lines = []
    for entry in labels:
        name, box = entry[0], entry[1]
        score = entry[2] if len(entry) > 2 else None
        corners = box.corners()
        norm = corners / np.array([sx, sy])
        if (norm < -1e-9).any() or (norm > 1 + 1e-9).any():
            logger.warning("clamping out-of-range corners for a label in %s", path)
        norm = np.clip(norm, 0.0, 1.0)
        fieldstrs = [name] + [f"{v:.10f}" for v in norm.ravel()]
        if score is not None:
            fieldstrs.append(f"{score:.6f}")
        lines.append(" ".join(fieldstrs))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_obb_labels(path: str | Path, size: tuple,
                    with_scores: bool = False) -> list:
    """Read label lines back into (class, OrientedBox[, score]) pixel-space tuples."""
    sx, sy = float(size[0]), float(size[1])
    out = []
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts:
            continue
        if len(parts) not in (9, 10):
            raise ValueError(f"bad label line in {path}: {raw!r}")
        name = parts[0]
        vals = np.asarray([float(v) for v in parts[1:9]]).reshape(4, 2)
        corners = vals * np.array([sx, sy])
        box = min_area_rect(corners)
        if with_scores:
            score = float(parts[9]) if len(parts) == 10 else None
            out.append((name, box, score))
        else:
            out.append((name, box))
    return out
