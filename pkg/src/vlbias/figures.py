"""Render audit reports and comparisons to PNG figures.

Everything here consumes finished report objects; no figure ever feeds
back into a computation.  The Agg backend is forced so rendering works
on headless machines.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .audit import CategoryAudit, ComparisonTable, ModelAuditReport  # noqa: E402

_BAR_COLOR = "#4878b0"
_DPI = 150


def _finish(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_entropy_bars(report: ModelAuditReport, axis: str,
                      path: Union[str, Path]) -> Path:
    """Mean normalized entropy per category for one demographic axis."""
    names = [c.category.value for c in report.categories
             if axis in c.mean_entropy_by_axis]
    values = [c.mean_entropy_by_axis[axis] for c in report.categories
              if axis in c.mean_entropy_by_axis]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.85 * len(names) + 2), 4.0))
    ax.bar(range(len(names)), values, color=_BAR_COLOR)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=35, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel(f"mean normalized entropy ({axis})")
    ax.set_title(f"{report.model_name} on {report.dataset_name}, k={report.k}")
    ax.axhline(1.0, color="gray", linewidth=0.8, linestyle="--")
    fig.tight_layout()
    return _finish(fig, Path(path))


def save_intersection_heatmap(category_audit: CategoryAudit,
                              path: Union[str, Path],
                              model_name: str = "") -> Path:
    """Top-k share of each race-gender intersection, one row per word."""
    audits = [wa for wa in category_audit.word_audits
              if "race_gender" in wa.retrieval_distributions]
    if not audits:
        raise ValueError(
            f"category {category_audit.category.value} has no intersection data"
        )
    labels = audits[0].retrieval_distributions["race_gender"].group_labels
    words = [wa.caption.source_word.text for wa in audits]
    matrix = np.array([
        wa.retrieval_distributions["race_gender"].probabilities for wa in audits
    ])
    fig, ax = plt.subplots(
        figsize=(0.65 * len(labels) + 2.5, 0.38 * len(words) + 2.2)
    )
    image = ax.imshow(matrix, cmap="viridis", vmin=0.0, aspect="auto")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=55, ha="right", fontsize=7)
    ax.set_yticks(range(len(words)))
    ax.set_yticklabels(words, fontsize=7)
    title = f"top-k share by intersection: {category_audit.category.value}"
    if model_name:
        title = f"{model_name}, {title}"
    ax.set_title(title, fontsize=10)
    fig.colorbar(image, ax=ax, shrink=0.8, label="share of retrieved rows")
    fig.tight_layout()
    return _finish(fig, Path(path))


def save_comparison_bars(table: ComparisonTable, axis: str,
                         path: Union[str, Path]) -> Path:
    """Grouped bars: per-category mean entropy, one series per model."""
    rows = [r for r in table.rows if r["axis"] == axis]
    categories = [r["category"] for r in rows]
    n_models = len(table.model_names)
    width = 0.8 / max(n_models, 1)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(categories) + 2), 4.2))
    x = np.arange(len(categories))
    for j, model in enumerate(table.model_names):
        heights = [r["values"].get(model, np.nan) for r in rows]
        ax.bar(x + (j - (n_models - 1) / 2) * width, heights, width, label=model)
    ax.set_xticks(x)
    ax.set_xticklabels(categories, rotation=35, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel(f"mean normalized entropy ({axis})")
    ax.set_title(f"{table.dataset_name}, k={table.k}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _finish(fig, Path(path))


def render_report_figures(report: ModelAuditReport,
                          out_dir: Union[str, Path]) -> list[Path]:
    """Standard figure set for one report: entropy bars per axis plus an
    intersection heatmap per category."""
    out_dir = Path(out_dir)
    written = []
    axes = sorted({axis for cat in report.categories
                   for axis in cat.mean_entropy_by_axis})
    for axis in axes:
        written.append(save_entropy_bars(
            report, axis, out_dir / f"entropy_{axis}.png"))
    for cat in report.categories:
        has_grid = any("race_gender" in wa.retrieval_distributions
                       for wa in cat.word_audits)
        if has_grid:
            name = cat.category.value.lower()
            written.append(save_intersection_heatmap(
                cat, out_dir / f"topk_share_{name}.png",
                model_name=report.model_name))
    return written


def render_comparison_figures(table: ComparisonTable,
                              out_dir: Union[str, Path]) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for axis in sorted({r["axis"] for r in table.rows}):
        written.append(save_comparison_bars(
            table, axis, out_dir / f"compare_{axis}.png"))
    return written
