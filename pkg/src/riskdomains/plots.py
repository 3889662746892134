"""Hand-rolled static SVG 1.1 scatter plots.

The output is assembled from formatted strings only, so identical inputs
produce identical bytes. That property is part of the subcommand
reproducibility contract and is why no plotting library is used here.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .domains import ALL_DOMAINS, Domain
from .errors import DataError

# One fixed color per domain, Other last.
_PALETTE = {
    Domain.APPEARANCE: "#4477aa",
    Domain.THOUGHT_CONTENT: "#ee6677",
    Domain.INTERPERSONAL: "#228833",
    Domain.MOOD: "#ccbb44",
    Domain.OCCUPATION: "#66ccee",
    Domain.THOUGHT_PROCESS: "#aa3377",
    Domain.SUBSTANCE: "#ee8833",
    Domain.OTHER: "#777777",
}

_WIDTH, _HEIGHT = 760, 520
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 170, 40, 50


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def write_scatter_svg(
    path: str | Path,
    coords,
    labels: Sequence[Domain],
    title: str = "2-component discriminant projection",
) -> None:
    """Scatter of 2-d coordinates colored by domain, with a legend."""
    points = [(float(x), float(y)) for x, y in coords]
    if len(points) != len(labels):
        raise DataError("scatter needs one label per coordinate pair")
    if not points:
        raise DataError("scatter needs at least one point")

    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = (x_hi - x_lo) * 0.05 or 0.5
    y_pad = (y_hi - y_lo) * 0.05 or 0.5
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(x: float) -> str:
        return _fmt(_MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w)

    def sy(y: float) -> str:
        # SVG y grows downward.
        return _fmt(_MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
        f'<text x="{_MARGIN_L}" y="24" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
        # Axes box.
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333333"/>',
    ]
    # Min/max tick labels on both axes.
    lines.append(
        f'<text x="{_MARGIN_L}" y="{_HEIGHT - _MARGIN_B + 18}" '
        f'font-family="sans-serif" font-size="11">{_fmt(x_lo)}</text>'
    )
    lines.append(
        f'<text x="{_MARGIN_L + plot_w - 30}" y="{_HEIGHT - _MARGIN_B + 18}" '
        f'font-family="sans-serif" font-size="11">{_fmt(x_hi)}</text>'
    )
    lines.append(
        f'<text x="{_MARGIN_L - 45}" y="{_MARGIN_T + plot_h}" '
        f'font-family="sans-serif" font-size="11">{_fmt(y_lo)}</text>'
    )
    lines.append(
        f'<text x="{_MARGIN_L - 45}" y="{_MARGIN_T + 10}" '
        f'font-family="sans-serif" font-size="11">{_fmt(y_hi)}</text>'
    )
    for (x, y), domain in zip(points, labels):
        lines.append(
            f'<circle cx="{sx(x)}" cy="{sy(y)}" r="3" '
            f'fill="{_PALETTE[domain]}" fill-opacity="0.7"/>'
        )
    # Legend: only domains that appear, in fixed order.
    present = [d for d in ALL_DOMAINS if d in set(labels)]
    legend_x = _WIDTH - _MARGIN_R + 20
    for i, domain in enumerate(present):
        y0 = _MARGIN_T + 14 + i * 20
        lines.append(
            f'<rect x="{legend_x}" y="{y0 - 9}" width="10" height="10" '
            f'fill="{_PALETTE[domain]}"/>'
        )
        lines.append(
            f'<text x="{legend_x + 16}" y="{y0}" font-family="sans-serif" '
            f'font-size="12">{domain.value}</text>'
        )
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
