"""Evaluation report output: JSON, delimited table, and a summary figure."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import MetricReport, TABLE_ROWS, render_table


def _row_values(report: MetricReport) -> dict[str, float]:
    return {
        "ROUGE-1": report.rouge1.f1,
        "ROUGE-2": report.rouge2.f1,
        "ROUGE-L": report.rougeL.f1,
        "Average BLEU": report.avg_bleu,
        "Cosine Similarity": report.cosine_similarity,
    }


def write_report_json(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True),
                          encoding="utf-8")


def write_report_csv(report: MetricReport, path: str | Path) -> None:
    values = _row_values(report)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "score"])
        for row in TABLE_ROWS:
            writer.writerow([row, f"{values[row]:.6f}"])
        writer.writerow(["Relevance Rate", f"{report.relevance_rate:.6f}"])
        writer.writerow(["Hallucination Rate", f"{report.hallucination_rate:.6f}"])


def write_report_figure(report: MetricReport, path: str | Path) -> None:
    values = _row_values(report)
    fig, ax = plt.subplots(figsize=(7, 4))
    names = list(TABLE_ROWS)
    scores = [values[n] for n in names]
    ax.barh(names[::-1], scores[::-1], color="#4878a8")
    ax.set_xlim(0, 1)
    ax.set_xlabel("Score")
    ax.set_title(f"Performance metrics ({report.n_items} items)")
    for i, score in enumerate(scores[::-1]):
        ax.text(score + 0.01, i, f"{score:.3f}", va="center", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report_bundle(report: MetricReport, out_json: str | Path) -> dict[str, Path]:
    """Write report.json plus .csv and .png siblings; return their paths."""
    out_json = Path(out_json)
    paths = {
        "json": out_json,
        "csv": out_json.with_suffix(".csv"),
        "png": out_json.with_suffix(".png"),
    }
    write_report_json(report, paths["json"])
    write_report_csv(report, paths["csv"])
    write_report_figure(report, paths["png"])
    return paths


__all__ = [
    "render_table",
    "write_report_json",
    "write_report_csv",
    "write_report_figure",
    "write_report_bundle",
]
