"""Report writers for the eval path: JSON, delimited per-dialog table, figure.

Given an output path like ``out/report.json``, the writer drops three files
next to each other: the report JSON, a ``.csv`` with one row per dialog, and
a ``.png`` bar chart of the four corpus metrics. Nothing here embeds
timestamps, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import EvalReport


def write_report_json(report: EvalReport, path: Path) -> None:
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def write_report_csv(report: EvalReport, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "informed", "successful"])
        for row in report.per_dialog:
            writer.writerow([row["id"], int(row["informed"]), int(row["successful"])])


def write_report_figure(report: EvalReport, path: Path) -> None:
    labels = ["Inform", "Success", "BLEU", "Combined"]
    values = [report.inform_pct, report.success_pct, report.bleu_pct, report.combined_pct]
    fig, ax = plt.subplots(figsize=(6, 4))
    bars = ax.bar(labels, values, color=["#4c72b0", "#55a868", "#c44e52", "#8172b3"])
    ax.bar_label(bars, fmt="%.2f")
    ax.set_ylabel("score (%)")
    ax.set_title(f"corpus evaluation over {report.n_dialogs} dialogs")
    ax.set_ylim(0, max(values + [100.0]) * 1.15)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report_files(report: EvalReport, out_path: str | Path) -> dict[str, Path]:
    """Write JSON + CSV + PNG alongside each other; returns the paths written."""
    json_path = Path(out_path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path = json_path.with_suffix(".csv")
    png_path = json_path.with_suffix(".png")
    write_report_json(report, json_path)
    write_report_csv(report, csv_path)
    write_report_figure(report, png_path)
    return {"json": json_path, "csv": csv_path, "figure": png_path}
