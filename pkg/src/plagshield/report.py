"""Static report emission: JSON, CSV, and SVG box plots.

The SVG writer is deliberately hand-rolled: output bytes depend only on the
input numbers, so report trees are reproducible. Box plots use the 1.5-IQR
whisker convention with outlier dots, one box per variant/category.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .stats import (CliffsDeltaResult, DeltaReport, DistributionSummary,
                    WilcoxonResult, summarize)

CSV_COLUMNS = ["Variant", "Median", "Mean", "Q1", "Q3",
               "DeltaMean", "DeltaMedian", "DeltaIQR"]


@dataclass
class VariantReport:
    variant: str
    pairs: str  # OP | P2S | FG
    summary: DistributionSummary
    deltas: Optional[DeltaReport] = None
    wilcoxon: Optional[WilcoxonResult] = None
    cliffs: Optional[CliffsDeltaResult] = None

    def to_record(self) -> dict:
        return {
            "variant": self.variant,
            "pairs": self.pairs,
            "summary": self.summary.to_record(),
            "deltas": self.deltas.to_record() if self.deltas else None,
            "wilcoxon": self.wilcoxon.to_record() if self.wilcoxon else None,
            "cliffs": self.cliffs.to_record() if self.cliffs else None,
        }


@dataclass
class StageReport:
    stage: str
    reports: list[VariantReport] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        record = {"stage": self.stage, "metadata": self.metadata,
                  "reports": [r.to_record() for r in self.reports]}
        return json.dumps(record, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for report in self.reports:
            if report.pairs == "OP" and report.deltas is None and any(
                    r.pairs != "OP" for r in self.reports):
                continue  # baselines appear via the deltas of the attack rows
            deltas = report.deltas
            writer.writerow([
                f"{report.variant}/{report.pairs}",
                f"{report.summary.median:.4f}",
                f"{report.summary.mean:.4f}",
                f"{report.summary.q1:.4f}",
                f"{report.summary.q3:.4f}",
                f"{deltas.delta_mean:.4f}" if deltas else "",
                f"{deltas.delta_median:.4f}" if deltas else "",
                f"{deltas.delta_iqr:.4f}" if deltas else "",
            ])
        return buffer.getvalue()


def parse_report_csv(text: str) -> list[dict]:
    """Round-trip reader for the harness's own CSV output."""
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        for key in CSV_COLUMNS[1:]:
            if row[key] != "":
                row[key] = float(row[key])
    return rows


# --- box plots ---

def _fmt(value: float) -> str:
    return f"{value:.2f}"


def box_plot_svg(groups: Sequence[tuple[str, Sequence[float]]],
                 title: str = "", y_label: str = "similarity [%]",
                 y_max: float = 100.0) -> str:
    """Side-by-side box plots (1.5-IQR whiskers, outlier dots) as SVG text."""
    width_per_box = 90
    margin_left, margin_top, margin_bottom = 60, 40, 50
    height = 360
    plot_height = height - margin_top - margin_bottom
    width = margin_left + width_per_box * max(1, len(groups)) + 30

    def y_of(value: float) -> float:
        clamped = max(0.0, min(y_max, value))
        return margin_top + plot_height * (1 - clamped / y_max)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="14" y="{margin_top + plot_height / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {margin_top + plot_height / 2:.0f})">{y_label}</text>',
    ]
    for tick in range(0, int(y_max) + 1, 25):
        ty = y_of(tick)
        parts.append(f'<line x1="{margin_left - 5}" y1="{_fmt(ty)}" x2="{width - 20}" '
                     f'y2="{_fmt(ty)}" stroke="#dddddd"/>')
        parts.append(f'<text x="{margin_left - 9}" y="{_fmt(ty + 4)}" '
                     f'text-anchor="end">{tick}</text>')

    for index, (label, values) in enumerate(groups):
        cx = margin_left + width_per_box * index + width_per_box / 2
        if values:
            s = summarize(values)
            iqr = s.q3 - s.q1
            lo_fence = s.q1 - 1.5 * iqr
            hi_fence = s.q3 + 1.5 * iqr
            inside = [v for v in values if lo_fence <= v <= hi_fence]
            whisker_lo = min(inside) if inside else s.q1
            whisker_hi = max(inside) if inside else s.q3
            outliers = [v for v in values if v < lo_fence or v > hi_fence]
            box_w = 40
            parts.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(y_of(whisker_lo))}" '
                         f'x2="{_fmt(cx)}" y2="{_fmt(y_of(whisker_hi))}" stroke="#333333"/>')
            for w in (whisker_lo, whisker_hi):
                parts.append(f'<line x1="{_fmt(cx - 12)}" y1="{_fmt(y_of(w))}" '
                             f'x2="{_fmt(cx + 12)}" y2="{_fmt(y_of(w))}" stroke="#333333"/>')
            parts.append(
                f'<rect x="{_fmt(cx - box_w / 2)}" y="{_fmt(y_of(s.q3))}" width="{box_w}" '
                f'height="{_fmt(max(0.5, y_of(s.q1) - y_of(s.q3)))}" '
                f'fill="#9ecae1" stroke="#333333"/>')
            parts.append(f'<line x1="{_fmt(cx - box_w / 2)}" y1="{_fmt(y_of(s.median))}" '
                         f'x2="{_fmt(cx + box_w / 2)}" y2="{_fmt(y_of(s.median))}" '
                         f'stroke="#111111" stroke-width="2"/>')
            for v in sorted(outliers):
                parts.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(y_of(v))}" r="2.5" '
                             f'fill="none" stroke="#555555"/>')
        parts.append(f'<text x="{_fmt(cx)}" y="{height - 28}" '
                     f'text-anchor="middle">{label}</text>')

    parts.append(f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" '
                 f'font-size="11">whiskers at 1.5*IQR; dots are outliers</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
