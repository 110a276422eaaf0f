"""Bar-chart rendering for benchmark reports.

Writes PNG files next to the JSON/CSV report output: one accuracy comparison
per question category and one overall gain chart.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import CATEGORIES, EvalReport, GainTable

_BAR_WIDTH = 0.38


def _category_figure(
    with_report: EvalReport,
    without_report: EvalReport,
    category: str,
    path: Path,
) -> None:
    datasets = [
        d for d in with_report.datasets() if with_report.cell(d, category).total > 0
    ]
    if not datasets:
        return
    xs = range(len(datasets))
    with_acc = [with_report.cell(d, category).accuracy for d in datasets]
    without_acc = [without_report.cell(d, category).accuracy for d in datasets]

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar([x - _BAR_WIDTH / 2 for x in xs], with_acc, _BAR_WIDTH, label="with framework")
    ax.bar([x + _BAR_WIDTH / 2 for x in xs], without_acc, _BAR_WIDTH, label="without framework")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(datasets, rotation=15, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("execution accuracy")
    ax.set_title(f"{category.replace('_', '-')} questions")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _gain_figure(gains: GainTable, path: Path) -> None:
    rows = list(gains.rows)
    if not rows:
        return
    labels = [f"{r.dataset}\n{r.category.replace('_', '-')}" for r in rows]
    values = [r.gain_points for r in rows]

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar(range(len(rows)), values)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_ylabel("accuracy gain (percentage points)")
    ax.set_title("gain from dynamic-schema prompting")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_report_figures(
    with_report: EvalReport,
    without_report: EvalReport,
    gains: GainTable,
    out_dir: str | Path,
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for category in CATEGORIES:
        path = out / f"accuracy_{category}.png"
        _category_figure(with_report, without_report, category, path)
        if path.exists():
            written.append(path)
    gain_path = out / "gains.png"
    _gain_figure(gains, gain_path)
    if gain_path.exists():
        written.append(gain_path)
    return written
