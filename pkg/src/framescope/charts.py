"""Standalone SVG chart emission for the report stage.

The figures are simple bar families, so the markup is generated directly:
output bytes are a pure function of the input values, which keeps rerun
artifacts byte-identical.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

_PALETTE = ("#4878a8", "#d65f5f", "#6aa56a", "#b07aa1", "#c2a14d", "#7f7f7f")
_FONT = "font-family=\"Helvetica, Arial, sans-serif\""


def _fmt(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".") or "0"


def _value_label(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return f"{value:.4g}"


def _nice_ceiling(value: float) -> float:
    if value <= 0:
        return 1.0
    magnitude = 10 ** math.floor(math.log10(value))
    for mult in (1, 2, 2.5, 5, 10):
        if value <= mult * magnitude:
            return mult * magnitude
    return 10 * magnitude


def _svg(width: float, height: float, body: list[str], manifest_hash: str) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
    ]
    if manifest_hash:
        head.append(f"<!-- manifest:{manifest_hash} -->")
    head.append(f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="#ffffff"/>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


def placeholder_chart(title: str, manifest_hash: str = "") -> str:
    body = [
        f'<text x="200" y="40" text-anchor="middle" font-size="16" {_FONT}>{_escape(title)}</text>',
        f'<text x="200" y="110" text-anchor="middle" font-size="14" fill="#888888" {_FONT}>no data</text>',
    ]
    return _svg(400, 200, body, manifest_hash)


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def grouped_bar_chart(
    title: str,
    categories: Sequence[str],
    series: Mapping[str, Mapping[str, float]],
    manifest_hash: str = "",
) -> str:
    """Grouped vertical bars: one group per category, one bar per series."""
    series_names = sorted(series)
    if not categories or not series_names:
        return placeholder_chart(title, manifest_hash)
    values = [series[name].get(cat, 0.0) for name in series_names for cat in categories]
    vmax = max(values + [0.0])
    if vmax <= 0:
        return placeholder_chart(title, manifest_hash)
    top = _nice_ceiling(vmax)

    bar_w = 16.0
    group_gap = 18.0
    group_w = bar_w * len(series_names) + group_gap
    margin_left, margin_top = 70.0, 56.0
    plot_h = 240.0
    label_h = 110.0
    width = margin_left + group_w * len(categories) + 30.0
    height = margin_top + plot_h + label_h

    body: list[str] = []
    body.append(
        f'<text x="{_fmt(width / 2)}" y="24" text-anchor="middle" font-size="15" {_FONT}>'
        f"{_escape(title)}</text>"
    )
    # y axis with 5 ticks
    for i in range(6):
        frac = i / 5
        y = margin_top + plot_h * (1 - frac)
        body.append(
            f'<line x1="{_fmt(margin_left)}" y1="{_fmt(y)}" '
            f'x2="{_fmt(width - 20)}" y2="{_fmt(y)}" stroke="#dddddd" stroke-width="1"/>'
        )
        body.append(
            f'<text x="{_fmt(margin_left - 6)}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-size="10" {_FONT}>{_value_label(top * frac)}</text>'
        )
    # legend
    for idx, name in enumerate(series_names):
        color = _PALETTE[idx % len(_PALETTE)]
        lx = margin_left + idx * 90.0
        body.append(f'<rect x="{_fmt(lx)}" y="34" width="10" height="10" fill="{color}"/>')
        body.append(
            f'<text x="{_fmt(lx + 14)}" y="43" font-size="11" {_FONT}>{_escape(name)}</text>'
        )
    # bars
    for c_idx, category in enumerate(categories):
        gx = margin_left + group_gap / 2 + c_idx * group_w
        for s_idx, name in enumerate(series_names):
            value = series[name].get(category, 0.0)
            h = plot_h * (value / top)
            x = gx + s_idx * bar_w
            y = margin_top + plot_h - h
            color = _PALETTE[s_idx % len(_PALETTE)]
            body.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bar_w - 2)}" '
                f'height="{_fmt(h)}" fill="{color}"/>'
            )
            if value > 0:
                body.append(
                    f'<text x="{_fmt(x + (bar_w - 2) / 2)}" y="{_fmt(y - 3)}" '
                    f'text-anchor="middle" font-size="8" {_FONT}>{_value_label(value)}</text>'
                )
        label_x = gx + (group_w - group_gap) / 2
        label_y = margin_top + plot_h + 12
        body.append(
            f'<text x="{_fmt(label_x)}" y="{_fmt(label_y)}" font-size="10" {_FONT} '
            f'text-anchor="end" transform="rotate(-40 {_fmt(label_x)} {_fmt(label_y)})">'
            f"{_escape(category)}</text>"
        )
    body.append(
        f'<line x1="{_fmt(margin_left)}" y1="{_fmt(margin_top + plot_h)}" '
        f'x2="{_fmt(width - 20)}" y2="{_fmt(margin_top + plot_h)}" stroke="#333333" stroke-width="1"/>'
    )
    return _svg(width, height, body, manifest_hash)


def horizontal_bar_chart(
    title: str,
    items: Sequence[tuple[str, float]],
    manifest_hash: str = "",
) -> str:
    """Horizontal bars in the given order, numeric labels at the bar ends."""
    if not items:
        return placeholder_chart(title, manifest_hash)
    vmax = max(value for _label, value in items)
    if vmax <= 0:
        return placeholder_chart(title, manifest_hash)
    top = _nice_ceiling(vmax)

    bar_h = 18.0
    gap = 8.0
    margin_left = 170.0
    margin_top = 44.0
    plot_w = 360.0
    height = margin_top + len(items) * (bar_h + gap) + 24.0
    width = margin_left + plot_w + 70.0

    body: list[str] = []
    body.append(
        f'<text x="{_fmt(width / 2)}" y="24" text-anchor="middle" font-size="15" {_FONT}>'
        f"{_escape(title)}</text>"
    )
    for idx, (label, value) in enumerate(items):
        y = margin_top + idx * (bar_h + gap)
        w = plot_w * (value / top)
        body.append(
            f'<text x="{_fmt(margin_left - 8)}" y="{_fmt(y + bar_h - 5)}" text-anchor="end" '
            f'font-size="11" {_FONT}>{_escape(label)}</text>'
        )
        body.append(
            f'<rect x="{_fmt(margin_left)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(bar_h)}" fill="{_PALETTE[0]}"/>'
        )
        body.append(
            f'<text x="{_fmt(margin_left + w + 5)}" y="{_fmt(y + bar_h - 5)}" '
            f'font-size="11" {_FONT}>{_value_label(value)}</text>'
        )
    return _svg(width, height, body, manifest_hash)
