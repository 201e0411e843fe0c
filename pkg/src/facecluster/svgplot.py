"""Self-contained SVG renderings of the elbow curve and silhouette bars.

Hand-rolled on purpose: the plots must be deterministic text artifacts with
no external assets so pipeline reruns can be compared byte for byte.
"""

from __future__ import annotations

import numpy as np

from .model_select import ElbowCurve, SilhouetteReport

_PALETTE = (
    "#4e79a7",
    "#f28e2b",
    "#59a14f",
    "#e15759",
    "#76b7b2",
    "#edc948",
    "#b07aa1",
    "#9c755f",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _header(width: int, height: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]


def elbow_svg(curve: ElbowCurve, knee: int | None = None,
              width: int = 640, height: int = 400) -> str:
    ks = [k for k, _ in curve.points]
    ss = [s for _, s in curve.points]
    left, right, top, bottom = 60, 20, 20, 48
    px = width - left - right
    py = height - top - bottom
    smax = max(ss) if max(ss) > 0 else 1.0
    kspan = (ks[-1] - ks[0]) or 1

    def xpos(k):
        return left + px * (k - ks[0]) / kspan

    def ypos(s):
        return top + py * (1.0 - s / smax)

    parts = _header(width, height)
    parts.append(
        f'<line x1="{left}" y1="{top + py}" x2="{left + px}" y2="{top + py}" '
        'stroke="#333" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + py}" '
        'stroke="#333" stroke-width="1"/>'
    )
    pts = " ".join(f"{_fmt(xpos(k))},{_fmt(ypos(s))}" for k, s in curve.points)
    parts.append(
        f'<polyline points="{pts}" fill="none" stroke="{_PALETTE[0]}" stroke-width="2"/>'
    )
    for k, s in curve.points:
        parts.append(
            f'<circle cx="{_fmt(xpos(k))}" cy="{_fmt(ypos(s))}" r="3" fill="{_PALETTE[0]}"/>'
        )
        parts.append(
            f'<text x="{_fmt(xpos(k))}" y="{height - bottom + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{k}</text>'
        )
    if knee is not None:
        parts.append(
            f'<line x1="{_fmt(xpos(knee))}" y1="{top}" x2="{_fmt(xpos(knee))}" '
            f'y2="{top + py}" stroke="{_PALETTE[3]}" stroke-width="1" '
            'stroke-dasharray="4 3"/>'
        )
        parts.append(
            f'<text x="{_fmt(xpos(knee) + 4)}" y="{top + 12}" font-size="11" '
            f'fill="{_PALETTE[3]}" font-family="sans-serif">knee k={knee}</text>'
        )
    parts.append(
        f'<text x="{left - 8}" y="{top + 10}" font-size="11" text-anchor="end" '
        f'font-family="sans-serif">{_fmt(smax)}</text>'
    )
    parts.append(
        f'<text x="{left - 8}" y="{top + py}" font-size="11" text-anchor="end" '
        'font-family="sans-serif">0</text>'
    )
    parts.append(
        f'<text x="{left + px // 2}" y="{height - 8}" font-size="12" '
        'text-anchor="middle" font-family="sans-serif">clusters k (SSE vs k)</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def silhouette_svg(report: SilhouetteReport, labels,
                   width: int = 640, bar_height: int = 3) -> str:
    """Horizontal silhouette bars grouped by cluster, with the overall-mean line."""
    labels = np.asarray(labels, dtype=np.int64)
    s = report.per_sample
    order = np.lexsort((-s, labels))  # by cluster, then descending silhouette
    n = len(order)
    left, right, top, bottom = 60, 20, 20, 40
    gap = 8
    clusters = np.unique(labels)
    px = width - left - right
    py = n * bar_height + (len(clusters) - 1) * gap
    height = top + py + bottom

    def xpos(v):
        return left + px * (v + 1.0) / 2.0  # silhouette range [-1, 1]

    parts = _header(width, height)
    zero_x = _fmt(xpos(0.0))
    parts.append(
        f'<line x1="{zero_x}" y1="{top}" x2="{zero_x}" y2="{top + py}" '
        'stroke="#bbb" stroke-width="1"/>'
    )
    y = top
    prev_cluster = None
    for idx in order:
        c = int(labels[idx])
        if prev_cluster is not None and c != prev_cluster:
            y += gap
        if c != prev_cluster:
            parts.append(
                f'<text x="{left - 8}" y="{y + 10}" font-size="11" text-anchor="end" '
                f'font-family="sans-serif">c{c} (n={int(report.cluster_sizes[c])})</text>'
            )
            prev_cluster = c
        v = float(s[idx])
        x0 = xpos(min(0.0, v))
        bw = abs(xpos(v) - xpos(0.0))
        color = _PALETTE[c % len(_PALETTE)]
        parts.append(
            f'<rect x="{_fmt(x0)}" y="{y}" width="{_fmt(bw)}" height="{bar_height}" '
            f'fill="{color}"/>'
        )
        y += bar_height
    mean_x = _fmt(xpos(report.overall_mean))
    parts.append(
        f'<line x1="{mean_x}" y1="{top}" x2="{mean_x}" y2="{top + py}" '
        f'stroke="{_PALETTE[3]}" stroke-width="1.5" stroke-dasharray="5 3"/>'
    )
    parts.append(
        f'<text x="{mean_x}" y="{top + py + 16}" font-size="11" text-anchor="middle" '
        f'fill="{_PALETTE[3]}" font-family="sans-serif">'
        f'mean {report.overall_mean:.3f}</text>'
    )
    parts.append(
        f'<text x="{left + px // 2}" y="{height - 8}" font-size="12" '
        'text-anchor="middle" font-family="sans-serif">'
        "silhouette value per sample, grouped by cluster</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
