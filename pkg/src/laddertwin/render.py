"""Deterministic SVG and DOT renderings of a ladder graph."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

from .ladder import POSITIVE_FEEDBACK, FeedbackLoop, LadderEdge, LadderGraph


@dataclass(frozen=True)
class RenderStyle:
    min_stroke: float = 1.0
    max_stroke: float = 8.0
    axis_spacing: float = 220.0
    channel_spacing: float = 70.0
    margin: float = 70.0
    lagged_color: str = "#2e8b57"
    structural_color: str = "#1f5fbf"
    highlight_color: str = "#d62728"
    dash_pattern: str = "6,4"
    highlight_positive_feedback: bool = True

    def __post_init__(self):
        if not (self.max_stroke >= self.min_stroke > 0):
            raise ValueError("need max_stroke >= min_stroke > 0")


def _f(v: float) -> str:
    return f"{v:.6g}"


def stroke_width(edge: LadderEdge, max_magnitude: float, style: RenderStyle) -> float:
    return style.min_stroke + (style.max_stroke - style.min_stroke) * edge.magnitude / max_magnitude


def _axis_labels(lag_order: int) -> list[str]:
    return [f"T-{d}" for d in range(lag_order, 0, -1)] + ["T", "T"]


def render_svg(
    g: LadderGraph, loops: Sequence[FeedbackLoop] = (), style: RenderStyle | None = None
) -> str:
    """Ladder diagram: past axes on the left, then the present axis twice.

    Lagged edges run from the ``T-d`` axis to the first ``T`` axis, structural
    edges from the first ``T`` axis to the second. Negative edges are dashed.
    Positive-feedback loops spanning two or more channels are overdrawn in
    the highlight colour; self-loops (SNL) are not highlighted.
    """
    style = style or RenderStyle()
    lag_order = g.lag_order
    labels = _axis_labels(lag_order)
    xs = [style.margin + i * style.axis_spacing for i in range(len(labels))]
    x_now, x_right = xs[-2], xs[-1]
    ys = [style.margin + 30 + i * style.channel_spacing for i in range(len(g.channels))]
    width = xs[-1] + style.margin
    height = (ys[-1] if ys else style.margin) + style.margin
    bottom = height - style.margin + 20
    max_mag = max((e.magnitude for e in g.edges), default=0.0)

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">',
        "<defs>",
    ]
    for name, color in (("lagged", style.lagged_color), ("structural", style.structural_color),
                        ("highlight", style.highlight_color)):
        out.append(
            f'<marker id="arrow-{name}" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="4" '
            f'markerHeight="4" orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z" fill="{color}"/></marker>'
        )
    out.append("</defs>")

    out.append('<g class="axes" stroke="#444" stroke-width="1">')
    for x, label in zip(xs, labels):
        out.append(f'<line class="axis" x1="{_f(x)}" y1="{_f(style.margin)}" x2="{_f(x)}" y2="{_f(bottom)}"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(style.margin - 12)}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14" stroke="none">{label}</text>')
    out.append("</g>")

    out.append('<g class="channels" font-family="sans-serif" font-size="13">')
    for name, y in zip(g.channels, ys):
        out.append(f'<text x="{_f(xs[0] - 10)}" y="{_f(y + 4)}" text-anchor="end">{escape(name)}</text>')
        out.append(f'<text x="{_f(x_right + 10)}" y="{_f(y + 4)}" text-anchor="start">{escape(name)}</text>')
        for x in xs:
            out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="3" fill="#444"/>')
    out.append("</g>")

    def segment(e: LadderEdge) -> tuple[float, float, float, float]:
        if e.lagged:
            return xs[-2 - e.lag], ys[e.from_channel], x_now, ys[e.to_channel]
        return x_now, ys[e.from_channel], x_right, ys[e.to_channel]

    out.append('<g class="edges" fill="none">')
    for e in g.edges:
        x1, y1, x2, y2 = segment(e)
        kind = "lagged" if e.lagged else "structural"
        color = style.lagged_color if e.lagged else style.structural_color
        dash = f' stroke-dasharray="{style.dash_pattern}"' if e.sign < 0 else ""
        title = f"{g.name(e.from_channel)} -> {g.name(e.to_channel)} {e.kind.value} lag {e.lag}: {_f(e.value)}"
        out.append(
            f'<line class="edge {e.kind.value.lower()}" x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" '
            f'y2="{_f(y2)}" stroke="{color}" stroke-width="{_f(stroke_width(e, max_mag, style))}"'
            f'{dash} marker-end="url(#arrow-{kind})"><title>{escape(title)}</title></line>'
        )
    out.append("</g>")

    if style.highlight_positive_feedback:
        seen: set[LadderEdge] = set()
        marked = []
        for lp in loops:
            if lp.classification != POSITIVE_FEEDBACK or len(lp.path) < 2:
                continue
            for e in lp.path:
                if e not in seen:
                    seen.add(e)
                    marked.append(e)
        if marked:
            out.append(f'<g class="feedback" fill="none" stroke="{style.highlight_color}" stroke-opacity="0.7">')
            for e in marked:
                x1, y1, x2, y2 = segment(e)
                dash = f' stroke-dasharray="{style.dash_pattern}"' if e.sign < 0 else ""
                out.append(
                    f'<line class="highlight" x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                    f'stroke-width="{_f(stroke_width(e, max_mag, style) + 2)}"{dash} '
                    f'marker-end="url(#arrow-highlight)"/>'
                )
            out.append("</g>")

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _dq(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node(channel: str, offset: int) -> str:
    return _dq(f"{channel}@T" if offset == 0 else f"{channel}@T-{offset}")


def render_dot(g: LadderGraph) -> str:
    """Time-unrolled digraph with nodes ``<channel>@T-d`` and ``<channel>@T``."""
    lag_order = g.lag_order
    lines = ["digraph ladder {", "  rankdir=LR;", "  node [shape=box];"]
    for offset in range(lag_order, -1, -1):
        rank = [_node(name, offset) for name in g.channels]
        for name, node in zip(g.channels, rank):
            lines.append(f"  {node} [label={_dq(name + ('(t)' if offset == 0 else f'(t-{offset})'))}];")
        if rank:
            lines.append(f"  {{ rank=same; {'; '.join(rank)}; }}")
    for e in g.edges:
        src = _node(g.name(e.from_channel), e.lag)
        dst = _node(g.name(e.to_channel), 0)
        color = "darkgreen" if e.lagged else "blue"
        style = "dashed" if e.sign < 0 else "solid"
        lines.append(
            f'  {src} -> {dst} [kind="{e.kind.value}", lag={e.lag}, sign="{"+" if e.sign > 0 else "-"}", '
            f'magnitude={_f(e.magnitude)}, label="{_f(e.value)}", color={color}, style={style}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
