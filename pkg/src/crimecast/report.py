"""Report files and the predicted-vs-actual error-bar chart."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .metrics import AggregateReport, StatePrediction, TrialMetrics

TRIALS_HEADER = ("trial_id", "seed", "total_loss", "test_mse", "wall_time_s", "cpu_time_s",
                 "stopped_epoch")
TIMING_FIELDS = ("wall_time_s", "cpu_time_s")
PER_STATE_HEADER = ("state", "actual", "mean_predicted", "adl", "ape")
PREDICTIONS_HEADER = ("state", "year", "predicted", "actual")


def _writer(path: Path):
    fh = Path(path).open("w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_trials_csv(trials: Sequence[TrialMetrics], path: str | Path,
                     include_timing: bool = True) -> None:
    """One row per trial. Without timing the file is reproducible byte for byte."""
    header = [h for h in TRIALS_HEADER if include_timing or h not in TIMING_FIELDS]
    fh, w = _writer(path)
    with fh:
        w.writerow(header)
        for t in trials:
            values = {"trial_id": t.trial_id, "seed": t.seed, "total_loss": repr(t.total_loss),
                      "test_mse": repr(t.test_mse), "wall_time_s": repr(t.wall_time_s),
                      "cpu_time_s": repr(t.cpu_time_s), "stopped_epoch": t.stopped_epoch}
            w.writerow([values[h] for h in header])


def write_per_state_csv(report: AggregateReport, path: str | Path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(PER_STATE_HEADER)
        for s in report.per_state:
            w.writerow([s.state, repr(s.actual), repr(s.mean_predicted), repr(s.adl), repr(s.ape)])


def write_predictions_csv(predictions: Sequence[StatePrediction], path: str | Path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(PREDICTIONS_HEADER)
        for p in predictions:
            w.writerow([p.state, p.year, repr(p.predicted), repr(p.actual)])


def write_report_json(report: AggregateReport, path: str | Path, include_timing: bool = True) -> None:
    data = report.to_dict()
    if not include_timing:
        for name in TIMING_FIELDS:
            del data[name]
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def write_timings_json(trials: Sequence[TrialMetrics], report: AggregateReport,
                       path: str | Path) -> None:
    """Measured wall/CPU seconds, kept apart from the reproducible reports."""
    data = {name: asdict(getattr(report, name)) for name in TIMING_FIELDS}
    data["trials"] = [{"trial_id": t.trial_id, "seed": t.seed, "wall_time_s": t.wall_time_s,
                       "cpu_time_s": t.cpu_time_s} for t in trials]
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ErrorBarPoint:
    state: str
    actual: float
    mean_predicted: float


@dataclass(frozen=True)
class ErrorBarChart:
    points: tuple[ErrorBarPoint, ...]
    half_width: float
    title: str = "Predicted vs actual violent crime (error bars: RMSE)"
    x_label: str = "Actual violent crime"
    y_label: str = "Mean predicted violent crime"
    width: int = 800
    height: int = 600


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    magnitude = 10 ** math.floor(math.log10(raw))
    step = min((m * magnitude for m in (1, 2, 5, 10) if m * magnitude >= raw), default=raw)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * span:
        ticks.append(v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_error_bars(
    report: AggregateReport,
    predictions: Sequence[StatePrediction] | None = None,
    width: int = 800,
    height: int = 600,
) -> tuple[ErrorBarChart, str]:
    """One marker per state at (actual, mean predicted) with symmetric RMSE bars.

    ``predictions`` overrides the per-state values stored in ``report``.
    """
    if predictions is not None:
        points = tuple(ErrorBarPoint(p.state, p.actual, p.predicted) for p in predictions)
    else:
        points = tuple(ErrorBarPoint(s.state, s.actual, s.mean_predicted) for s in report.per_state)
    chart = ErrorBarChart(points, report.rmse, width=width, height=height)
    return chart, chart_to_svg(chart)


def chart_to_svg(chart: ErrorBarChart) -> str:
    w, h, hw = chart.width, chart.height, chart.half_width
    left, right, top, bottom = 80, 20, 40, 60
    values = [v for p in chart.points for v in (p.actual, p.mean_predicted - hw, p.mean_predicted + hw)]
    lo, hi = (min(values), max(values)) if values else (0.0, 1.0)
    pad = (hi - lo) * 0.05 or max(abs(hi), 1.0) * 0.05
    lo, hi = lo - pad, hi + pad

    def sx(v: float) -> float:
        return left + (v - lo) / (hi - lo) * (w - left - right)

    def sy(v: float) -> float:
        return h - bottom - (v - lo) / (hi - lo) * (h - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text class="title" x="{w / 2:.1f}" y="22" text-anchor="middle" font-size="15">'
        f'{escape(chart.title)}</text>',
        f'<g class="axes" stroke="black">'
        f'<line x1="{left}" y1="{h - bottom}" x2="{w - right}" y2="{h - bottom}"/>'
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{h - bottom}"/></g>',
    ]
    ticks = ['<g class="ticks">']
    for v in _nice_ticks(lo, hi):
        ticks.append(f'<line x1="{_fmt(sx(v))}" y1="{h - bottom}" x2="{_fmt(sx(v))}" '
                     f'y2="{h - bottom + 5}" stroke="black"/>'
                     f'<text x="{_fmt(sx(v))}" y="{h - bottom + 18}" text-anchor="middle">{v:g}</text>')
        ticks.append(f'<line x1="{left - 5}" y1="{_fmt(sy(v))}" x2="{left}" y2="{_fmt(sy(v))}" '
                     f'stroke="black"/>'
                     f'<text x="{left - 8}" y="{_fmt(sy(v) + 4)}" text-anchor="end">{v:g}</text>')
    ticks.append("</g>")
    out.extend(ticks)
    out.append(
        f'<text class="x-label" x="{(left + w - right) / 2:.1f}" y="{h - 15}" '
        f'text-anchor="middle">{escape(chart.x_label)}</text>')
    out.append(
        f'<text class="y-label" x="18" y="{(top + h - bottom) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(top + h - bottom) / 2:.1f})">{escape(chart.y_label)}</text>')
    out.append(
        f'<line class="reference" x1="{_fmt(sx(lo))}" y1="{_fmt(sy(lo))}" x2="{_fmt(sx(hi))}" '
        f'y2="{_fmt(sy(hi))}" stroke="grey" stroke-dasharray="4 4"/>')
    for p in chart.points:
        x = sx(p.actual)
        y_top, y_mid, y_bot = sy(p.mean_predicted + hw), sy(p.mean_predicted), sy(p.mean_predicted - hw)
        out.append(
            f'<g class="state" data-state="{escape(p.state)}" data-half-width="{hw!r}">'
            f'<line class="error-bar" x1="{_fmt(x)}" y1="{_fmt(y_top)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(y_bot)}" stroke="steelblue"/>'
            f'<line class="cap" x1="{_fmt(x - 4)}" y1="{_fmt(y_top)}" x2="{_fmt(x + 4)}" '
            f'y2="{_fmt(y_top)}" stroke="steelblue"/>'
            f'<line class="cap" x1="{_fmt(x - 4)}" y1="{_fmt(y_bot)}" x2="{_fmt(x + 4)}" '
            f'y2="{_fmt(y_bot)}" stroke="steelblue"/>'
            f'<circle class="marker" cx="{_fmt(x)}" cy="{_fmt(y_mid)}" r="3.5" fill="darkred"/>'
            f'<text x="{_fmt(x + 6)}" y="{_fmt(y_mid - 6)}">{escape(p.state)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_error_bars_svg(svg: str, path: str | Path) -> None:
    Path(path).write_text(svg, encoding="utf-8")
