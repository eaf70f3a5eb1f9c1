"""Deterministic SVG line chart of a mass trajectory."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .io import TrajectoryTable
from .model import ValidationError

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 150, 20, 50
MAX_POINTS = 2000
PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def _num(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _tick_label(v: float) -> str:
    return f"{v:g}"


def render_svg(table: TrajectoryTable, title: str | None = None) -> str:
    """One polyline per type (markers when there is a single row), with
    axes, tick labels and a legend. Same input gives byte-identical output."""
    t = np.asarray(table.t, dtype=float)
    states = np.asarray(table.states, dtype=float)
    if states.size == 0 or len(t) == 0:
        raise ValidationError("cannot plot an empty trajectory")
    if states.shape != (len(t), len(table.columns)):
        raise ValidationError("trajectory columns do not match the header")
    if len(t) > MAX_POINTS:
        keep = np.unique(np.linspace(0, len(t) - 1, MAX_POINTS).round().astype(int))
        t, states = t[keep], states[keep]

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    t0, t1 = float(t[0]), float(t[-1])
    span = t1 - t0 if t1 > t0 else 1.0

    def sx(v):
        return LEFT + (v - t0) / span * pw

    def sy(v):
        return TOP + (1.0 - v) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="14" text-anchor="middle">{escape(title)}</text>')

    # axes and ticks
    out.append(
        f'<path d="M{LEFT},{TOP} V{TOP + ph} H{LEFT + pw}" fill="none" stroke="black"/>'
    )
    for v in np.linspace(0, 1, 5):
        y = _num(sy(v))
        out.append(f'<line x1="{LEFT - 4}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y}" text-anchor="end" dy="4">{_tick_label(v)}</text>')
    xticks = np.unique(np.linspace(t0, t1, 6).round()) if t1 > t0 else np.array([t0])
    for v in xticks:
        x = _num(sx(v))
        out.append(f'<line x1="{x}" y1="{TOP + ph}" x2="{x}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x}" y="{TOP + ph + 18}" text-anchor="middle">{int(v)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">step t</text>')
    out.append(
        f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">mass</text>'
    )

    for j, name in enumerate(table.columns):
        color = PALETTE[j % len(PALETTE)]
        col = states[:, j]
        label = escape(name)
        if len(t) == 1:
            out.append(
                f'<circle class="series" data-name="{label}" cx="{_num(sx(t[0]))}" '
                f'cy="{_num(sy(col[0]))}" r="3" fill="{color}"/>'
            )
        else:
            pts = " ".join(f"{_num(sx(a))},{_num(sy(b))}" for a, b in zip(t, col))
            out.append(
                f'<polyline class="series" data-name="{label}" points="{pts}" '
                f'fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        ly = TOP + 10 + 18 * j
        lx = LEFT + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{label}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
