"""CSV and SVG output for evolution metrics.

SVG is written directly: fixed canvas sizes, coordinates formatted with two
decimals and groups drawn in series order, so identical input gives
byte-identical documents.
"""

import csv
import io
import math
from collections.abc import Sequence
from datetime import datetime, timezone
from xml.sax.saxutils import escape

from .analytics import ChangeMatrix, MetricSeries, ReleaseConcentration, XAxis
from .errors import EmptySeries
from .repository import format_timestamp

WIDTH = 900
MARGIN_LEFT = 150
MARGIN_RIGHT = 30
MARGIN_TOP = 40
MARGIN_BOTTOM = 50
LINE_PLOT_HEIGHT = 360
ROW_HEIGHT = 26
DENSITY_HEIGHT = 60
BUBBLE_UNIT = 3.0
DOT_RADIUS = 2.5
PALETTE = [
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
]

Release = tuple[int | datetime, str]


def _x_text(x: int | datetime) -> str:
    return format_timestamp(x) if isinstance(x, datetime) else str(x)


def _value_text(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:.4f}"


def _csv_writer(buffer: io.StringIO):
    return csv.writer(buffer, lineterminator="\n")


def series_to_csv(
    series: Sequence[MetricSeries], name: str | None = None, x_axis: XAxis | None = None
) -> str:
    """CSV with header ``group,<version|timestamp>,<metric>`` and one row per point.

    Args:
        series: Series of one metric.
        name: Metric column name (defaults to the series' name).
        x_axis: Axis used for the header when ``series`` is empty.
    """
    axis = series[0].x_axis if series else (x_axis or XAxis.VERSION)
    metric = name or (series[0].name if series else "value")
    buffer = io.StringIO()
    writer = _csv_writer(buffer)
    writer.writerow(["group", axis.column, metric])
    for s in series:
        for x, value in s.points:
            writer.writerow([s.group, _x_text(x), _value_text(value)])
    return buffer.getvalue()


def matrix_to_csv(matrix: ChangeMatrix) -> str:
    """CSV with header ``module,row,entity,version,changes``; one row per cell."""
    buffer = io.StringIO()
    writer = _csv_writer(buffer)
    writer.writerow(["module", "row", "entity", "version", "changes"])
    for row, version, count in matrix.cells:
        writer.writerow([matrix.module_id, row, matrix.rows[row].value, version, count])
    return buffer.getvalue()


def release_concentration_to_csv(result: ReleaseConcentration) -> str:
    """CSV with header ``window,versions,mean_changes``."""
    buffer = io.StringIO()
    writer = _csv_writer(buffer)
    writer.writerow(["window", "versions", "mean_changes"])
    writer.writerow(["inside", result.inside_versions, f"{result.inside_mean:.4f}"])
    writer.writerow(["outside", result.outside_versions, f"{result.outside_mean:.4f}"])
    return buffer.getvalue()


def bubble_radius(count: float) -> float:
    """Bubble radius whose area is proportional to ``count``."""
    return BUBBLE_UNIT * math.sqrt(count)


def _numeric(x: int | datetime) -> float:
    return x.timestamp() if isinstance(x, datetime) else float(x)


class _Axis:
    """Linear map from data x values to canvas x coordinates."""

    def __init__(self, xs: Sequence[int | datetime], releases: Sequence[Release] = ()):
        values = [_numeric(x) for x in xs] + [_numeric(x) for x, _ in releases]
        self.is_time = any(isinstance(x, datetime) for x in xs)
        low, high = min(values), max(values)
        if low == high:
            pad = 43200.0 if self.is_time else 1.0
            low, high = low - pad, high + pad
        self.low, self.high = low, high
        self.left = MARGIN_LEFT
        self.right = WIDTH - MARGIN_RIGHT

    def __call__(self, x: int | datetime) -> float:
        fraction = (_numeric(x) - self.low) / (self.high - self.low)
        return self.left + fraction * (self.right - self.left)

    def ticks(self, count: int = 6) -> list[tuple[float, str]]:
        if self.is_time:
            out = []
            for i in range(count):
                value = self.low + (self.high - self.low) * i / (count - 1)
                label = datetime.fromtimestamp(value, tz=timezone.utc).strftime("%Y-%m-%d")
                out.append((self.left + (self.right - self.left) * i / (count - 1), label))
            return out
        step = max(1, math.ceil((self.high - self.low) / count))
        first = math.ceil(self.low / step) * step
        out = []
        value = first
        while value <= self.high:
            out.append((self(int(value)), str(int(value))))
            value += step
        return out


def _svg_open(height: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
        f"{escape(title)}</text>",
    ]


def _x_axis_lines(axis: _Axis, y: float, label: str) -> list[str]:
    lines = [
        f'<line x1="{axis.left:.2f}" y1="{y:.2f}" x2="{axis.right:.2f}" y2="{y:.2f}" '
        f'stroke="black"/>'
    ]
    for x, text in axis.ticks():
        lines.append(
            f'<line x1="{x:.2f}" y1="{y:.2f}" x2="{x:.2f}" y2="{y + 4:.2f}" stroke="black"/>'
        )
        lines.append(
            f'<text x="{x:.2f}" y="{y + 16:.2f}" text-anchor="middle">{escape(text)}</text>'
        )
    lines.append(
        f'<text x="{(axis.left + axis.right) / 2:.2f}" y="{y + 34:.2f}" '
        f'text-anchor="middle">{escape(label)}</text>'
    )
    return lines


def _release_lines(
    axis: _Axis, releases: Sequence[Release], top: float, bottom: float
) -> list[str]:
    lines = []
    for x, label in releases:
        cx = axis(x)
        lines.append(
            f'<line x1="{cx:.2f}" y1="{top:.2f}" x2="{cx:.2f}" y2="{bottom:.2f}" '
            f'stroke="#999999" stroke-dasharray="4,3"/>'
        )
        lines.append(
            f'<text x="{cx + 3:.2f}" y="{top + 10:.2f}" fill="#666666">{escape(label)}</text>'
        )
    return lines


def _all_points(series: Sequence[MetricSeries]) -> list:
    points = [p for s in series for p in s.points]
    if not points:
        raise EmptySeries("nothing to plot: the series have no points")
    return points


def render_line_svg(
    series: Sequence[MetricSeries], title: str, releases: Sequence[Release] = ()
) -> str:
    """Line plot of several series sharing the x axis (one colour per group).

    Raises:
        EmptySeries: If no series has a point.
    """
    points = _all_points(series)
    axis = _Axis([x for x, _ in points], releases)
    top = MARGIN_TOP
    bottom = top + LINE_PLOT_HEIGHT
    y_max = max(value for _, value in points) or 1.0

    def y(value: float) -> float:
        return bottom - (value / y_max) * (bottom - top)

    height = bottom + MARGIN_BOTTOM
    out = _svg_open(height, title)
    out.append(
        f'<line x1="{axis.left:.2f}" y1="{top:.2f}" x2="{axis.left:.2f}" y2="{bottom:.2f}" '
        f'stroke="black"/>'
    )
    for i in range(5):
        value = y_max * i / 4
        out.append(
            f'<text x="{axis.left - 6:.2f}" y="{y(value) + 4:.2f}" text-anchor="end">'
            f"{value:.0f}</text>"
        )
    out.extend(_release_lines(axis, releases, top, bottom))
    for index, s in enumerate(series):
        if not s.points:
            continue
        color = PALETTE[index % len(PALETTE)]
        coords = " ".join(f"{axis(x):.2f},{y(value):.2f}" for x, value in s.points)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        last_x, last_value = s.points[-1]
        out.append(
            f'<text x="{axis(last_x) + 4:.2f}" y="{y(last_value):.2f}" fill="{color}">'
            f"{escape(s.group)}</text>"
        )
    out.extend(_x_axis_lines(axis, bottom, "version" if not axis.is_time else "time"))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_bubble_svg(
    series: Sequence[MetricSeries],
    title: str,
    releases: Sequence[Release] = (),
    density: MetricSeries | None = None,
) -> str:
    """One row of bubbles per group; bubble area is proportional to the value.

    With ``density`` a version-density strip is drawn below the bubbles.

    Raises:
        EmptySeries: If no series has a point.
    """
    points = _all_points(series)
    xs = [x for x, _ in points]
    if density is not None:
        xs += [x for x, _ in density.points]
    axis = _Axis(xs, releases)
    rows = [s for s in series if s.points]
    top = MARGIN_TOP
    bottom = top + ROW_HEIGHT * len(rows)
    strip = DENSITY_HEIGHT if density is not None and density.points else 0
    height = bottom + strip + MARGIN_BOTTOM
    out = _svg_open(height, title)
    out.extend(_release_lines(axis, releases, top, bottom))
    for index, s in enumerate(rows):
        cy = top + ROW_HEIGHT * index + ROW_HEIGHT / 2
        color = PALETTE[index % len(PALETTE)]
        out.append(
            f'<text x="{axis.left - 8:.2f}" y="{cy + 4:.2f}" text-anchor="end">'
            f"{escape(s.group)}</text>"
        )
        out.append(
            f'<line x1="{axis.left:.2f}" y1="{cy:.2f}" x2="{axis.right:.2f}" y2="{cy:.2f}" '
            f'stroke="#eeeeee"/>'
        )
        for x, value in s.points:
            if value <= 0:
                continue
            out.append(
                f'<circle cx="{axis(x):.2f}" cy="{cy:.2f}" r="{bubble_radius(value):.2f}" '
                f'fill="{color}" fill-opacity="0.6"/>'
            )
    if strip:
        peak = max(value for _, value in density.points) or 1
        base = bottom + strip - 8
        out.append(
            f'<text x="{axis.left - 8:.2f}" y="{base:.2f}" text-anchor="end">version density</text>'
        )
        for x, value in density.points:
            bar = (strip - 16) * value / peak
            out.append(
                f'<rect x="{axis(x) - 1:.2f}" y="{base - bar:.2f}" width="2.00" '
                f'height="{bar:.2f}" fill="#444444"/>'
            )
    out.extend(_x_axis_lines(axis, bottom + strip, "version" if not axis.is_time else "time"))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_matrix_svg(matrix: ChangeMatrix, title: str, releases: Sequence[Release] = ()) -> str:
    """A dot where a version changes an entity; one row per entity.

    Raises:
        EmptySeries: If the module has no entity rows.
    """
    if not matrix.rows:
        raise EmptySeries(f"module {matrix.module_id} has no entities to plot")
    axis = _Axis(list(matrix.versions) or [0], releases)
    row_height = max(3.0, min(12.0, 480 / len(matrix.rows)))
    top = MARGIN_TOP
    bottom = top + row_height * len(matrix.rows)
    height = math.ceil(bottom) + MARGIN_BOTTOM
    out = _svg_open(height, title)
    out.append(
        f'<text x="{axis.left - 8:.2f}" y="{(top + bottom) / 2:.2f}" text-anchor="end">'
        f"entities ({len(matrix.rows)})</text>"
    )
    out.extend(_release_lines(axis, releases, top, bottom))
    for row, version, _ in matrix.cells:
        cy = top + row_height * row + row_height / 2
        out.append(
            f'<circle cx="{axis(version):.2f}" cy="{cy:.2f}" r="{DOT_RADIUS:.2f}" fill="black"/>'
        )
    out.extend(_x_axis_lines(axis, bottom, "version"))
    out.append("</svg>")
    return "\n".join(out) + "\n"
