"""Power-line corridor inspection toolkit.

Modules: imaging (pixel primitives), filterbank (directional filters and the
directional block), obbgeom (oriented-box geometry), dataset (annotation
conversion, tiling, splits), vegmetric (vegetation encroachment metric),
evalkit (curves, AUC, severity, detection AP), pipeline + cli (batch runs),
synth (synthetic fixtures), svgplot (deterministic charts).
"""

from .imaging import RasterImage, ScalarField, canny_edges, convolve2d, to_grayscale
from .obbgeom import OrientedBox, convex_hull, min_area_rect, rotated_iou
from .vegmetric import MetricConfig, VegReport, analyze_image
from .config import RunConfig

__version__ = "0.1.0"

__all__ = [
    "RasterImage", "ScalarField", "canny_edges", "convolve2d", "to_grayscale",
    "OrientedBox", "convex_hull", "min_area_rect", "rotated_iou",
    "MetricConfig", "VegReport", "analyze_image", "RunConfig", "__version__",
]
