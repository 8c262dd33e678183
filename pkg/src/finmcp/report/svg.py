"""Minimal grouped-bar chart writer producing deterministic SVG text."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f4e79", "#c55a11", "#548235", "#7f6000", "#7030a0", "#2e75b6")

WIDTH = 720
HEIGHT = 400
MARGIN_LEFT = 60
MARGIN_RIGHT = 20
MARGIN_TOP = 40
MARGIN_BOTTOM = 90


def _f(x: float) -> str:
    return f"{x:.2f}"


def _nice_max(values: Sequence[float]) -> float:
    top = max(values, default=0.0)
    if top <= 0:
        return 1.0
    if top <= 1.0:
        return 1.0
    step = 10 ** (len(str(int(top))) - 1)
    return float(-(-top // step) * step)


def grouped_bars(
    title: str,
    groups: Sequence[str],
    series: Sequence[tuple[str, Sequence[float | None]]],
    y_label: str = "",
    y_max: float | None = None,
) -> str:
    """Render bars for each group, one bar per series; ``None`` leaves a gap."""
    for name, values in series:
        if len(values) != len(groups):
            raise ValueError(f"series {name!r} has {len(values)} values for {len(groups)} groups")
    present = [v for _, vals in series for v in vals if v is not None]
    top = y_max if y_max is not None else _nice_max(present)
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    base_y = MARGIN_TOP + plot_h
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for i in range(5):
        frac = i / 4
        y = base_y - frac * plot_h
        parts.append(f'<line x1="{MARGIN_LEFT}" y1="{_f(y)}" x2="{WIDTH - MARGIN_RIGHT}" y2="{_f(y)}" '
                     f'stroke="#dddddd"/>')
        parts.append(f'<text x="{MARGIN_LEFT - 6}" y="{_f(y + 4)}" text-anchor="end">{top * frac:g}</text>')
    if y_label:
        parts.append(f'<text x="14" y="{MARGIN_TOP + plot_h / 2:.0f}" text-anchor="middle" '
                     f'transform="rotate(-90 14 {MARGIN_TOP + plot_h / 2:.0f})">{escape(y_label)}</text>')
    n_groups = max(len(groups), 1)
    slot = plot_w / n_groups
    bar_w = slot * 0.8 / max(len(series), 1)
    for gi, group in enumerate(groups):
        x0 = MARGIN_LEFT + gi * slot + slot * 0.1
        for si, (_, values) in enumerate(series):
            v = values[gi]
            if v is None:
                continue
            h = (min(v, top) / top) * plot_h if top else 0.0
            parts.append(
                f'<rect x="{_f(x0 + si * bar_w)}" y="{_f(base_y - h)}" width="{_f(bar_w)}" '
                f'height="{_f(h)}" fill="{PALETTE[si % len(PALETTE)]}"/>'
            )
        cx = MARGIN_LEFT + gi * slot + slot / 2
        parts.append(f'<text x="{_f(cx)}" y="{base_y + 14}" text-anchor="end" '
                     f'transform="rotate(-30 {_f(cx)} {base_y + 14})">{escape(group)}</text>')
    parts.append(f'<line x1="{MARGIN_LEFT}" y1="{base_y}" x2="{WIDTH - MARGIN_RIGHT}" y2="{base_y}" stroke="black"/>')
    lx = MARGIN_LEFT
    for si, (name, _) in enumerate(series):
        ly = HEIGHT - 14
        parts.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{PALETTE[si % len(PALETTE)]}"/>')
        parts.append(f'<text x="{lx + 14}" y="{ly}">{escape(name)}</text>')
        lx += 14 + 7 * len(name) + 16
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
