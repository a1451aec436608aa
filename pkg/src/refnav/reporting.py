"""Report rendering: aligned text tables, CSV, and matplotlib figures.

The CSV and the text table are generated from one set of formatted
strings, so they agree field-by-field by construction.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import MetricsReport

COLUMNS = ["Agent", "Succ.", "OSucc.", "SPL", "Length", "Grounding Succ."]


def format_report_rows(reports: dict[str, MetricsReport]) -> list[list[str]]:
    rows = []
    for name in sorted(reports):
        r = reports[name]
        rows.append([
            name,
            f"{r.success:.2f}",
            f"{r.oracle_success:.2f}",
            f"{r.spl:.2f}",
            f"{r.length:.2f}",
            f"{r.grounding_success:.2f}",
        ])
    return rows


def render_text_table(reports: dict[str, MetricsReport]) -> str:
    rows = [COLUMNS] + format_report_rows(reports)
    widths = [max(len(row[i]) for row in rows) for i in range(len(COLUMNS))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_report_csv(path, reports: dict[str, MetricsReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(COLUMNS)
        writer.writerows(format_report_rows(reports))


def save_metrics_figure(path, reports: dict[str, MetricsReport]) -> None:
    """Grouped bar chart of the percentage metrics per agent."""
    names = sorted(reports)
    metric_names = ["Succ.", "OSucc.", "SPL", "Grounding Succ."]
    getters = ["success", "oracle_success", "spl", "grounding_success"]
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(names), 1)
    for i, name in enumerate(names):
        values = [getattr(reports[name], g) for g in getters]
        ax.bar([j + i * width for j in range(len(metric_names))], values,
               width=width, label=name)
    ax.set_xticks([j + width * (len(names) - 1) / 2 for j in range(len(metric_names))])
    ax.set_xticklabels(metric_names)
    ax.set_ylabel("percent")
    ax.set_ylim(0, 105)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_loss_curve_figure(path, curve: list[tuple[str, int, float]]) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    phases = list(dict.fromkeys(phase for phase, _, _ in curve))
    offset = 0
    for phase in phases:
        points = [(e, l) for p, e, l in curve if p == phase]
        xs = [offset + e for e, _ in points]
        ax.plot(xs, [l for _, l in points], marker="o", markersize=3, label=phase)
        offset = max(xs) + 1 if xs else offset
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report_bundle(directory, reports: dict[str, MetricsReport]) -> dict[str, Path]:
    """CSV + text table + figure in one directory; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": directory / "report.csv",
        "text": directory / "report.txt",
        "figure": directory / "metrics.png",
    }
    write_report_csv(paths["csv"], reports)
    paths["text"].write_text(render_text_table(reports), encoding="utf-8")
    save_metrics_figure(paths["figure"], reports)
    return paths
