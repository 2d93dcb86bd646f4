"""Evaluation and corpus report rendering: text tables, CSV, and figures.

Figures are written to files next to the delimited output; matplotlib runs on
the Agg backend so this works headless.
"""

from __future__ import annotations

import csv
import pathlib

from .tagging import EvalReport


def report_table(report: EvalReport, title: str = "motion tagging") -> str:
    """Aligned plain-text table of per-class scores plus the averages."""
    rows = [(label, s.precision, s.recall, s.f1, s.support)
            for label, s in sorted(report.per_class.items())]
    label_width = max([len("class")] + [len(r[0]) for r in rows])
    lines = [f"{title} report ({report.sample_count} samples)"]
    header = f"{'class':<{label_width}}  {'prec':>6}  {'recall':>6}  {'f1':>6}  {'support':>7}"
    lines.append(header)
    lines.append("-" * len(header))
    for label, p, r, f1, support in rows:
        lines.append(f"{label:<{label_width}}  {p:6.3f}  {r:6.3f}  {f1:6.3f}  {support:7d}")
    lines.append("-" * len(header))
    lines.append(f"{'macro-F1':<{label_width}}  {report.macro_f1:27.6f}")
    lines.append(f"{'micro-F1':<{label_width}}  {report.micro_f1:27.6f}")
    return "\n".join(lines)


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "precision", "recall", "f1", "support"])
        for label, s in sorted(report.per_class.items()):
            writer.writerow([label, s.precision, s.recall, s.f1, s.support])
        writer.writerow(["macro_f1", report.macro_f1, "", "", ""])
        writer.writerow(["micro_f1", report.micro_f1, "", "", ""])


def _use_agg():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def write_report_figure(report: EvalReport, path, title: str = "per-class F1") -> None:
    """Horizontal bar chart of per-class F1 with the macro average marked."""
    plt = _use_agg()
    labels = sorted(report.per_class)
    scores = [report.per_class[label].f1 for label in labels]
    height = max(2.5, 0.28 * len(labels) + 1.2)
    fig, ax = plt.subplots(figsize=(7, height))
    ax.barh(range(len(labels)), scores, color="#4878cf")
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.axvline(report.macro_f1, color="#d65f5f", linestyle="--",
               label=f"macro-F1 = {report.macro_f1:.3f}")
    ax.set_xlim(0, 1.05)
    ax.set_xlabel("F1")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_histogram_figures(manifest: dict, out_dir) -> list[pathlib.Path]:
    """One bar chart per corpus histogram in the manifest."""
    plt = _use_agg()
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    hists = manifest.get("histograms", {})
    flat: dict[str, dict[str, int]] = {}
    for name, data in hists.items():
        if not data:
            continue
        if all(isinstance(v, dict) for v in data.values()):
            for sub, counts in data.items():
                if counts:
                    flat[f"{name}_{sub}"] = counts
        else:
            flat[name] = data
    for name, counts in flat.items():
        labels = sorted(counts)
        values = [counts[label] for label in labels]
        fig, ax = plt.subplots(figsize=(max(4.0, 0.4 * len(labels) + 1.5), 3.2))
        ax.bar(range(len(labels)), values, color="#6acc65")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel("count")
        ax.set_title(name.replace("_", " "))
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
