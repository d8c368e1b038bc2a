"""Directional filter bank: rotated 1D prototypes and the two-layer directional block.

A 1D prototype is embedded into an n-by-n grid along the line
``y = (x - n/2)*tan(theta) + n/2``; each cell's weight is the prototype tap of
its column scaled by the length of the line segment crossing that cell,
normalized by the center cell's segment length. Angles above 45 degrees come
from transposing the complementary kernel, negative angles from mirroring
across the horizontal axis.

The eight bank angles are the exact arctangents of {0, +-1/2, +-1, +-2, inf}
(displayed rounded as 0, +-26.57, +-45, +-63.43, 90 degrees).

The directional block runs: grayscale -> 8 high-pass directional convolutions
-> leaky ReLU -> per-channel low-pass directional convolution -> 1x1 channel
converter back to 3 channels. A channel labeled theta convolves with the
high-pass kernel oriented ACROSS theta (perpendicular tap trace) and the
low-pass kernel ALONG theta, so the channel responds selectively to structures
oriented at theta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imaging import RasterImage, ScalarField, correlate_array, to_grayscale

HIGHPASS_TAPS = (1 / 16, 0.0, -9 / 16, 1.0, -9 / 16, 0.0, 1 / 16)
LOWPASS_TAPS = (-1 / 4, -1 / 2, 1.0, 2.0, 1.0, -1 / 2, -1 / 4)

_DEG_26 = math.degrees(math.atan(0.5))
_DEG_63 = math.degrees(math.atan(2.0))

#: Bank angles in degrees, exact arctangent values, fixed order.
BANK_ANGLES_DEG = (0.0, _DEG_26, 45.0, _DEG_63, 90.0, -_DEG_63, -45.0, -_DEG_26)

WEIGHTS_FORMAT = "directional-block-weights/1"


@dataclass(frozen=True)
class Prototype1D:
    """Symmetric odd-length 1D filter; kind is "highpass" or "lowpass"."""

    taps: tuple
    kind: str

    def __post_init__(self):
        n = len(self.taps)
        if n % 2 == 0:
            raise ValueError("prototype length must be odd")
        if any(self.taps[i] != self.taps[n - 1 - i] for i in range(n)):
            raise ValueError("prototype taps must be symmetric")
        if self.kind == "highpass" and abs(sum(self.taps)) > 1e-12:
            raise ValueError("highpass taps must sum to zero")


def highpass_prototype() -> Prototype1D:
    """7-tap half-band maximally-flat high-pass: {1/16, 0, -9/16, 1, -9/16, 0, 1/16}."""
    return Prototype1D(HIGHPASS_TAPS, "highpass")


def lowpass_prototype() -> Prototype1D:
    """7-tap wide-band low-pass: {-1/4, -1/2, 1, 2, 1, -1/2, -1/4}."""
    return Prototype1D(LOWPASS_TAPS, "lowpass")


def cell_line_length(n: int, theta_deg: float, i: int, j: int) -> float:
    """Length of the center line's segment inside grid cell (i, j).

    The cell spans [i, i+1] x [j, j+1] with i horizontal and j vertical; the
    line is y = (x - n/2)*tan(theta) + n/2 for theta in [0, 45] degrees.
    Returns 0 when the line misses the cell.
    """
    if n % 2 == 0 or n < 1:
        raise ValueError("grid side length must be odd")
    if not (0.0 <= theta_deg <= 45.0 + 1e-12):
        raise ValueError("theta must lie in [0, 45] degrees")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError("cell index out of range")
    # tan(radians(45)) is 1-ulp off 1.0, which would leave sliver weights off
    # the diagonal and break exact transpose symmetry of the 45-degree kernel
    t = 1.0 if theta_deg == 45.0 else math.tan(math.radians(theta_deg))
    c = n / 2
    if t == 0.0:
        return 1.0 if j < c < j + 1 else 0.0
    x_lo = (j - c) / t + c
    x_hi = (j + 1 - c) / t + c
    lo = max(float(i), x_lo)
    hi = min(float(i + 1), x_hi)
    if hi <= lo:
        return 0.0
    return (hi - lo) * math.hypot(1.0, t)


@dataclass(frozen=True)
class Kernel2D:
    """n-by-n directional kernel; weights[row j][col i], finite."""

    weights: np.ndarray
    angle_deg: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
            raise ValueError("kernel weights must be square with odd side")
        if not np.isfinite(w).all():
            raise ValueError("kernel weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def rotate_filter(p: Prototype1D, theta_deg: float) -> Kernel2D:
    """Embed a 1D prototype along the theta-degree line of an n-by-n grid.

    |theta| <= 45 builds directly from cell line lengths; theta > 45 is the
    transpose of the (90 - theta) kernel; negative theta mirrors the |theta|
    kernel across the horizontal axis.
    """
    if not (-90.0 - 1e-9 <= theta_deg <= 90.0 + 1e-9):
        raise ValueError("theta must lie in [-90, 90] degrees")
    if theta_deg < 0.0:
        base = rotate_filter(p, -theta_deg)
        return Kernel2D(base.weights[::-1, :].copy(), theta_deg)
    if theta_deg > 45.0:
        base = rotate_filter(p, 90.0 - theta_deg)
        return Kernel2D(base.weights.T.copy(), theta_deg)
    n = len(p.taps)
    mid = (n - 1) // 2
    center_len = cell_line_length(n, theta_deg, mid, mid)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            length = cell_line_length(n, theta_deg, i, j)
            if length != 0.0:
                w[j, i] = p.taps[i] * length / center_len
    return Kernel2D(w, theta_deg)


@dataclass(frozen=True)
class DirectionalBank:
    """Exactly eight kernels at the bank angles, in BANK_ANGLES_DEG order."""

    kernels: tuple

    def __post_init__(self):
        if len(self.kernels) != 8:
            raise ValueError("bank must hold exactly 8 kernels")
        for k, ang in zip(self.kernels, BANK_ANGLES_DEG):
            if abs(k.angle_deg - ang) > 1e-9:
                raise ValueError("bank kernels out of order")

    def kernel_at(self, angle_deg: float) -> Kernel2D:
        for k in self.kernels:
            if abs(k.angle_deg - angle_deg) <= 1e-6:
                return k
        raise KeyError(f"no kernel at {angle_deg} degrees")


def build_bank(p: Prototype1D) -> DirectionalBank:
    """Rotate a prototype into the eight-direction bank."""
    return DirectionalBank(tuple(rotate_filter(p, a) for a in BANK_ANGLES_DEG))


def perpendicular_angle(theta_deg: float) -> float:
    """Fold theta + 90 into the principal range (-90, 90]."""
    out = theta_deg + 90.0
    if out > 90.0 + 1e-9:
        out -= 180.0
    return out


def _bank_index(angle_deg: float) -> int:
    for idx, a in enumerate(BANK_ANGLES_DEG):
        if abs(a - angle_deg) <= 1e-6:
            return idx
    raise KeyError(f"{angle_deg} is not a bank angle")


def prototype_response_at(p: Prototype1D, omega) -> np.ndarray:
    """|DTFT| magnitude of a prototype at angular frequency omega (radians)."""
    taps = np.asarray(p.taps)
    k = np.arange(len(taps)) - (len(taps) - 1) / 2
    om = np.atleast_1d(np.asarray(omega, dtype=np.float64))
    resp = np.abs(np.exp(-1j * np.outer(om, k)) @ taps)
    return resp if np.ndim(omega) else resp[0]


def kernel_response_at(k: Kernel2D, omega1, omega2) -> np.ndarray:
    """|DTFT| magnitude of a 2D kernel at (omega1, omega2), center-referenced."""
    n = k.n
    idx = np.arange(n) - (n - 1) / 2
    o1 = np.atleast_1d(np.asarray(omega1, dtype=np.float64))
    o2 = np.atleast_1d(np.asarray(omega2, dtype=np.float64))
    ex = np.exp(-1j * np.multiply.outer(o1, idx))          # horizontal index i
    ey = np.exp(-1j * np.multiply.outer(o2, idx))          # vertical index j
    resp = np.abs(np.einsum("pj,ji,pi->p", ey, k.weights, ex))
    return resp if np.ndim(omega1) else resp[0]


def frequency_response(k: Kernel2D, grid: int) -> ScalarField:
    """|DTFT| magnitude sampled on a grid-by-grid lattice over (-pi, pi)^2.

    Row index maps to omega2 (vertical frequency), column to omega1; the
    lattice is linspace(-pi, pi, grid, endpoint=False), which contains the DC
    sample for even grid sizes.
    """
    if grid < 16:
        raise ValueError("grid must be at least 16")
    om = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    o1, o2 = np.meshgrid(om, om)
    resp = kernel_response_at(k, o1.ravel(), o2.ravel())
    return ScalarField(resp.reshape(grid, grid))


def _uniform_converter() -> np.ndarray:
    return np.full((3, 8), 1.0 / 8.0)


@dataclass(frozen=True)
class DirectionalBlockParams:
    """Weights of the directional block (inference form, batch norm = identity)."""

    hp_bank: DirectionalBank
    lp_bank: DirectionalBank
    leaky_slope: float = 0.01
    converter: np.ndarray = field(default_factory=_uniform_converter)

    def __post_init__(self):
        if not (0.0 < self.leaky_slope < 1.0):
            raise ValueError("leaky slope must lie in (0, 1)")
        conv = np.asarray(self.converter, dtype=np.float64)
        if conv.shape != (3, 8):
            raise ValueError("converter must be a 3x8 mixing matrix")
        object.__setattr__(self, "converter", conv)


def default_block_params(leaky_slope: float = 0.01) -> DirectionalBlockParams:
    """Banks from the two prototypes, 1/8-averaging converter."""
    return DirectionalBlockParams(
        hp_bank=build_bank(highpass_prototype()),
        lp_bank=build_bank(lowpass_prototype()),
        leaky_slope=leaky_slope,
    )


def directional_features(gray: ScalarField, params: DirectionalBlockParams) -> np.ndarray:
    """Pre-converter feature stack, shape (8, H, W), channel k at BANK_ANGLES_DEG[k].

    Channel theta = leaky-ReLU(high-pass at perpendicular(theta)) convolved
    with the low-pass kernel at theta.
    """
    v = gray.values
    out = np.empty((8,) + v.shape)
    for idx, ang in enumerate(BANK_ANGLES_DEG):
        hp = params.hp_bank.kernels[_bank_index(perpendicular_angle(ang))]
        y = correlate_array(v, hp.weights, pad="zero")
        y = np.where(y > 0.0, y, params.leaky_slope * y)
        lp = params.lp_bank.kernels[idx]
        out[idx] = correlate_array(y, lp.weights, pad="zero")
    return out


def channel_energies(img: RasterImage | ScalarField, params: DirectionalBlockParams,
                     margin: int = 8) -> np.ndarray:
    """Interior L2 energy of each pre-converter channel, shape (8,)."""
    gray = to_grayscale(img) if isinstance(img, RasterImage) else img
    feats = directional_features(gray, params)
    h, w = feats.shape[1:]
    m = margin if (h > 2 * margin and w > 2 * margin) else 0
    inner = feats[:, m:h - m, m:w - m] if m else feats
    return np.einsum("khw,khw->k", inner, inner)


def directional_block_forward(img: RasterImage,
                              params: DirectionalBlockParams | None = None) -> RasterImage:
    """Run the block on an image and rescale the mixed output to 8-bit RGB.

    The interior (border of the combined 13x13 receptive field excluded) is
    affinely mapped from its min/max to [0, 255]; a constant interior maps to
    all zeros. Deterministic for identical inputs.
    """
    if params is None:
        params = default_block_params()
    gray = to_grayscale(img)
    feats = directional_features(gray, params)
    mixed = np.einsum("ck,khw->chw", params.converter, feats)
    h, w = mixed.shape[1:]
    m = 6 if (h > 12 and w > 12) else 0
    inner = mixed[:, m:h - m, m:w - m] if m else mixed
    lo, hi = float(inner.min()), float(inner.max())
    if hi - lo < 1e-12:
        out = np.zeros((h, w, 3), dtype=np.uint8)
    else:
        scaled = (mixed - lo) * (255.0 / (hi - lo))
        out = np.clip(np.rint(scaled), 0, 255).astype(np.uint8).transpose(1, 2, 0)
    return RasterImage(out)


def _bank_payload(bank: DirectionalBank) -> list:
    return [k.weights.ravel().tolist() for k in bank.kernels]


def export_block_weights(params: DirectionalBlockParams, path: str | Path) -> None:
    """Write block weights as documented JSON; byte-stable for equal inputs.

    Layers, in forward order:
      * directional_highpass — shape [8, 1, 7, 7]; output channel k convolves
        the grayscale input with the high-pass kernel at
        ``perpendicular_angles_deg[k]`` (the tap trace runs across the
        channel's orientation ``angles_deg[k]``).
      * directional_lowpass — stored as 8 kernels (channel k at
        ``angles_deg[k]``); equivalent dense shape [8, 8, 7, 7] is diagonal
        (out k takes in k only, off-diagonal blocks zero).
      * channel_converter — shape [3, 8, 1, 1] mixing matrix.
    Weight arrays are row-major (row-by-row) flattenings.
    """
    n = params.hp_bank.kernels[0].n
    perp = [perpendicular_angle(a) for a in BANK_ANGLES_DEG]
    doc = {
        "format": WEIGHTS_FORMAT,
        "kernel_size": n,
        "leaky_slope": params.leaky_slope,
        "angles_deg": list(BANK_ANGLES_DEG),
        "layers": [
            {
                "name": "directional_highpass",
                "shape": [8, 1, n, n],
                "kernel_angles_deg": perp,
                "wiring": "output channel k convolves the input with the high-pass "
                          "kernel at kernel_angles_deg[k], i.e. across angles_deg[k]",
                "weights": [params.hp_bank.kernels[_bank_index(a)].weights.ravel().tolist()
                            for a in perp],
            },
            {
                "name": "directional_lowpass",
                "shape": [8, 8, n, n],
                "depthwise": True,
                "kernel_angles_deg": list(BANK_ANGLES_DEG),
                "dense_mapping": "out channel k reads in channel k only; "
                                 "all off-diagonal 7x7 blocks are zero",
                "weights": _bank_payload(params.lp_bank),
            },
            {
                "name": "channel_converter",
                "shape": [3, 8, 1, 1],
                "weights": [row.tolist() for row in params.converter],
            },
        ],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_block_weights(path: str | Path) -> DirectionalBlockParams:
    """Inverse of :func:`export_block_weights`."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != WEIGHTS_FORMAT:
        raise ValueError("unrecognized weights file format")
    n = doc["kernel_size"]
    layers = {layer["name"]: layer for layer in doc["layers"]}
    hp_layer = layers["directional_highpass"]
    hp_by_angle = {}
    for ang, flat in zip(hp_layer["kernel_angles_deg"], hp_layer["weights"]):
        hp_by_angle[round(ang, 9)] = np.asarray(flat).reshape(n, n)
    hp = DirectionalBank(tuple(
        Kernel2D(hp_by_angle[round(a, 9)], a) for a in BANK_ANGLES_DEG))
    lp_layer = layers["directional_lowpass"]
    lp = DirectionalBank(tuple(
        Kernel2D(np.asarray(flat).reshape(n, n), a)
        for flat, a in zip(lp_layer["weights"], BANK_ANGLES_DEG)))
    conv = np.asarray([row[:8] for row in layers["channel_converter"]["weights"]])
    return DirectionalBlockParams(hp, lp, doc["leaky_slope"], conv)
