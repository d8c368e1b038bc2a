"""Minimal deterministic SVG line charts (byte-stable output, no plotting deps)."""

from __future__ import annotations

from pathlib import Path

WIDTH, HEIGHT = 560, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 36, 48
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_chart(path: str | Path, series: list, xlabel: str, ylabel: str,
               title: str, xlim: tuple = (0.0, 1.0), ylim: tuple = (0.0, 1.0)) -> None:
    """Write a polyline chart; `series` is a list of (name, xs, ys)."""
    x0, x1 = xlim
    y0, y1 = ylim
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * plot_w

    def py(y):
        return MARGIN_T + plot_h - (y - y0) / (y1 - y0) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
    ]
    for i in range(5):
        frac = i / 4
        gx = px(x0 + frac * (x1 - x0))
        gy = py(y0 + frac * (y1 - y0))
        parts.append(f'<line x1="{_fmt(gx)}" y1="{MARGIN_T}" x2="{_fmt(gx)}" '
                     f'y2="{MARGIN_T + plot_h}" stroke="#dddddd"/>')
        parts.append(f'<line x1="{MARGIN_L}" y1="{_fmt(gy)}" '
                     f'x2="{MARGIN_L + plot_w}" y2="{_fmt(gy)}" stroke="#dddddd"/>')
        parts.append(f'<text x="{_fmt(gx)}" y="{MARGIN_T + plot_h + 16}" '
                     f'text-anchor="middle">{x0 + frac * (x1 - x0):.2f}</text>')
        parts.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(gy + 4)}" '
                     f'text-anchor="end">{y0 + frac * (y1 - y0):.2f}</text>')
    parts.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
                 f'height="{plot_h}" fill="none" stroke="#333333"/>')
    for idx, (name, xs, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        ly = MARGIN_T + 16 + 16 * idx
        parts.append(f'<line x1="{MARGIN_L + plot_w - 110}" y1="{ly - 4}" '
                     f'x2="{MARGIN_L + plot_w - 90}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{MARGIN_L + plot_w - 84}" y="{ly}">{name}</text>')
    parts.append(f'<text x="{MARGIN_L + plot_w / 2:.0f}" y="{HEIGHT - 12}" '
                 f'text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{MARGIN_T + plot_h / 2:.0f}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {MARGIN_T + plot_h / 2:.0f})">{ylabel}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
