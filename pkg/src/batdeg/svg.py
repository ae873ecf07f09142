"""Deterministic, dependency-free SVG charts.

Three chart kinds: capacity curves (one polyline per test), fade dot plots
(one circle per cycle) and grouped scenario bars (model 1, model 2,
benchmark per scenario). Output depends only on the input data: no
timestamps, no random ids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence, Union
from xml.sax.saxutils import escape, quoteattr

from .errors import EmptyPlot

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 60
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
BAR_COLORS = {"model1": "#1f77b4", "model2": "#ff7f0e", "benchmark": "#2ca02c"}


@dataclass(frozen=True)
class Line:
    label: str
    x: Sequence[float]
    y: Sequence[float]


@dataclass(frozen=True)
class CapacityCurves:
    lines: Sequence[Line]
    title: str = "Discharge capacity"
    x_label: str = "Cycle"
    y_label: str = "Capacity (Ah)"
    y_range: tuple[float, float] | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class DegradationDots:
    lines: Sequence[Line]
    title: str = "Per-cycle capacity fade"
    x_label: str = "Cycle"
    y_label: str = "Fade (Ah)"
    metadata: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class BarGroup:
    label: str
    model1: float
    model2: float
    benchmark: float


@dataclass(frozen=True)
class ScenarioBars:
    groups: Sequence[BarGroup]
    title: str = "Degradation per cycle by scenario"
    y_label: str = "Fade (Ah/cycle)"
    metadata: Mapping[str, Any] = field(default_factory=dict)


PlotSpec = Union[CapacityCurves, DegradationDots, ScenarioBars]


def _f(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while start + k * step <= hi + step * 1e-9:
        ticks.append(round(start + k * step, 12))
        k += 1
    return ticks


class _Axes:
    def __init__(self, x0: float, x1: float, y0: float, y1: float):
        if not all(math.isfinite(v) for v in (x0, x1, y0, y1)):
            raise EmptyPlot("axis range is not finite")
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            pad = abs(y0) * 0.05 or 0.5
            y0, y1 = y0 - pad, y1 + pad
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.pw = WIDTH - MARGIN_L - MARGIN_R
        self.ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(self, x: float) -> float:
        return MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y: float) -> float:
        return MARGIN_T + (1 - (y - self.y0) / (self.y1 - self.y0)) * self.ph


def _header(title: str, metadata: Mapping[str, Any]) -> list[str]:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f"<title>{escape(title)}</title>",
    ]
    if metadata:
        out.append(f"<metadata>{escape(json.dumps(dict(metadata), sort_keys=True))}</metadata>")
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>'
    )
    return out


def _axes_markup(ax: _Axes, x_label: str, y_label: str, x_ticks: bool = True) -> list[str]:
    left, right = MARGIN_L, WIDTH - MARGIN_R
    top, bottom = MARGIN_T, HEIGHT - MARGIN_B
    out = [
        f'<g class="axes" stroke="black" stroke-width="1">'
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/>'
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/></g>'
    ]
    for v in nice_ticks(ax.y0, ax.y1):
        y = ax.py(v)
        out.append(
            f'<line x1="{left - 4}" y1="{_f(y)}" x2="{left}" y2="{_f(y)}" stroke="black"/>'
            f'<text x="{left - 6}" y="{_f(y + 4)}" text-anchor="end">{_tick_label(v)}</text>'
        )
    if x_ticks:
        for v in nice_ticks(ax.x0, ax.x1):
            x = ax.px(v)
            out.append(
                f'<line x1="{_f(x)}" y1="{bottom}" x2="{_f(x)}" y2="{bottom + 4}" stroke="black"/>'
                f'<text x="{_f(x)}" y="{bottom + 16}" text-anchor="middle">{_tick_label(v)}</text>'
            )
    out.append(
        f'<text x="{(left + right) / 2:.2f}" y="{HEIGHT - 18}" text-anchor="middle">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{(top + bottom) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(top + bottom) / 2:.2f})">{escape(y_label)}</text>'
    )
    return out


def _legend(items: Sequence[tuple[str, str]], bottom: bool = False) -> list[str]:
    out = ['<g class="legend">']
    x = MARGIN_L + 10
    y = HEIGHT - MARGIN_B - 14 * len(items) if bottom else MARGIN_T + 10
    for k, (label, color) in enumerate(items):
        yy = y + 14 * k
        out.append(
            f'<rect x="{x}" y="{yy - 8}" width="10" height="10" fill="{color}"/>'
            f'<text x="{x + 14}" y="{yy + 1}">{escape(label)}</text>'
        )
    out.append("</g>")
    return out


def _check_lines(lines: Sequence[Line]) -> None:
    if not lines or all(len(line.x) == 0 for line in lines):
        raise EmptyPlot("nothing to plot")
    for line in lines:
        if len(line.x) != len(line.y):
            raise ValueError(f"{line.label}: x and y lengths differ")


def _extent(lines: Sequence[Line]) -> tuple[float, float, float, float]:
    xs = [float(v) for line in lines for v in line.x]
    ys = [float(v) for line in lines for v in line.y]
    return min(xs), max(xs), min(ys), max(ys)


def _render_curves(spec: CapacityCurves) -> list[str]:
    _check_lines(spec.lines)
    x0, x1, y0, y1 = _extent(spec.lines)
    if spec.y_range is not None:
        y0, y1 = spec.y_range
    ax = _Axes(x0, x1, y0, y1)
    out = _header(spec.title, spec.metadata) + _axes_markup(ax, spec.x_label, spec.y_label)
    legend = []
    for k, line in enumerate(spec.lines):
        if len(line.x) == 0:
            continue
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_f(ax.px(x))},{_f(ax.py(y))}" for x, y in zip(line.x, line.y))
        out.append(
            f'<polyline class="series" data-label={quoteattr(line.label)} fill="none" '
            f'stroke="{color}" stroke-width="1.2" points="{pts}"/>'
        )
        legend.append((line.label, color))
    return out + _legend(legend, bottom=True)


def _render_dots(spec: DegradationDots) -> list[str]:
    _check_lines(spec.lines)
    x0, x1, y0, y1 = _extent(spec.lines)
    ax = _Axes(x0, x1, min(y0, 0.0), max(y1, 0.0))
    out = _header(spec.title, spec.metadata) + _axes_markup(ax, spec.x_label, spec.y_label)
    zero = ax.py(0.0)
    out.append(
        f'<line class="zero" x1="{MARGIN_L}" y1="{_f(zero)}" x2="{WIDTH - MARGIN_R}" '
        f'y2="{_f(zero)}" stroke="#999" stroke-dasharray="3,3"/>'
    )
    legend = []
    for k, line in enumerate(spec.lines):
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<g class="dots" data-label={quoteattr(line.label)} fill="{color}">')
        out.extend(f'<circle cx="{_f(ax.px(x))}" cy="{_f(ax.py(y))}" r="1.5"/>' for x, y in zip(line.x, line.y))
        out.append("</g>")
        legend.append((line.label, color))
    return out + _legend(legend)


def _render_bars(spec: ScenarioBars) -> list[str]:
    if not spec.groups:
        raise EmptyPlot("no scenarios to plot")
    values = [v for g in spec.groups for v in (g.model1, g.model2, g.benchmark)]
    if not all(math.isfinite(v) for v in values):
        raise EmptyPlot("bar values are not finite")
    lo, hi = min(0.0, min(values)), max(0.0, max(values))
    ax = _Axes(0.0, float(len(spec.groups)), lo, hi * 1.1 if hi > 0 else hi)
    out = _header(spec.title, spec.metadata) + _axes_markup(ax, "Scenario", spec.y_label, x_ticks=False)
    slot = ax.pw / len(spec.groups)
    bar_w = slot * 0.8 / 3
    zero = ax.py(0.0)
    for gi, g in enumerate(spec.groups):
        left = MARGIN_L + gi * slot + slot * 0.1
        out.append(f'<g class="scenario" data-label={quoteattr(g.label)}>')
        for bi, name in enumerate(("model1", "model2", "benchmark")):
            v = getattr(g, name)
            y = ax.py(v)
            top, h = min(y, zero), abs(zero - y)
            out.append(
                f'<rect class="bar {name}" x="{_f(left + bi * bar_w)}" y="{_f(top)}" '
                f'width="{_f(bar_w)}" height="{_f(h)}" fill="{BAR_COLORS[name]}">'
                f"<title>{escape(g.label)} {name}: {v:.6g}</title></rect>"
            )
        out.append(
            f'<text x="{_f(left + 1.5 * bar_w)}" y="{HEIGHT - MARGIN_B + 16}" '
            f'text-anchor="middle">{escape(g.label)}</text>'
        )
        out.append("</g>")
    return out + _legend([("Model 1 (linear)", BAR_COLORS["model1"]),
                          ("Model 2 (DOD)", BAR_COLORS["model2"]),
                          ("Benchmark", BAR_COLORS["benchmark"])])


def emit_svg(spec: PlotSpec) -> str:
    """Render a plot spec to a standalone SVG document."""
    if isinstance(spec, CapacityCurves):
        body = _render_curves(spec)
    elif isinstance(spec, DegradationDots):
        body = _render_dots(spec)
    elif isinstance(spec, ScenarioBars):
        body = _render_bars(spec)
    else:
        raise TypeError(f"unknown plot spec {type(spec).__name__}")
    return "\n".join(body + ["</svg>"]) + "\n"


# ---------------------------------------------------------------------------
# builders from domain objects


def capacity_curves(series: Sequence[Any], **kwargs) -> CapacityCurves:
    lines = [Line(s.meta.test_id, [i for i, _ in s.cycles], [c for _, c in s.cycles]) for s in series]
    return CapacityCurves(lines=lines, **kwargs)


def degradation_dots(series: Sequence[Any], **kwargs) -> DegradationDots:
    lines = [Line(s.meta.test_id, [i for i, _ in s.deltas], [d for _, d in s.deltas]) for s in series]
    return DegradationDots(lines=lines, **kwargs)


def scenario_bars(reports: Sequence[Any], **kwargs) -> ScenarioBars:
    groups = [BarGroup(r.key.label(), r.model1_fade, r.model2_fade, r.benchmark_fade) for r in reports]
    return ScenarioBars(groups=groups, **kwargs)
