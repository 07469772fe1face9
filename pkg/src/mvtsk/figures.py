"""Report figures rendered to PNG files next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import TaskSummary

LAMBDA_PARAMS = ("lam_reg", "lam_transfer", "lam_mmd", "lam_consensus")


def accuracy_figure(summaries: list[TaskSummary], path: Path) -> Path:
    """Grouped bar chart: per-task accuracy by method, SD error bars."""
    tasks = sorted({(s.source, s.target) for s in summaries})
    methods = sorted({s.method for s in summaries})
    lookup = {(s.method, s.source, s.target): s for s in summaries}
    width = 0.8 / max(1, len(methods))
    x = np.arange(len(tasks))
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(tasks), 4.0))
    for pos, method in enumerate(methods):
        means = []
        sds = []
        for task in tasks:
            s = lookup.get((method,) + task)
            means.append(100.0 * s.mean if s else np.nan)
            sds.append(100.0 * s.sd if s else 0.0)
        offset = (pos - (len(methods) - 1) / 2.0) * width
        ax.bar(x + offset, means, width=width, yerr=sds, capsize=3,
               label=method)
    ax.set_xticks(x)
    ax.set_xticklabels([f"{s}->{t}" for s, t in tasks], rotation=15)
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0.0, 105.0)
    ax.legend(fontsize="small")
    ax.set_title("held-out accuracy by task and method")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def sensitivity_figures(
    sweep_rows: list[dict[str, str]], out_dir: Path
) -> list[Path]:
    """One curve per hyperparameter from a grid-sweep CSV.

    For each value of the parameter the curve shows the best mean
    accuracy over all settings of the remaining parameters, per task.
    """
    out_dir = Path(out_dir)
    written: list[Path] = []
    tasks = sorted({(r["source"], r["target"]) for r in sweep_rows})
    for param in LAMBDA_PARAMS + ("fuzzy_index",):
        values = sorted({float(r[param]) for r in sweep_rows})
        if len(values) < 2:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for source, target in tasks:
            ys = []
            for value in values:
                accs = [
                    float(r["accuracy"])
                    for r in sweep_rows
                    if r["source"] == source
                    and r["target"] == target
                    and float(r[param]) == value
                    and r["accuracy"]
                ]
                ys.append(100.0 * max(accs) if accs else np.nan)
            ax.plot(values, ys, marker="o", label=f"{source}->{target}")
        if min(values) > 0:
            ax.set_xscale("log")
        ax.set_xlabel(param)
        ax.set_ylabel("best accuracy (%)")
        ax.legend(fontsize="small")
        ax.set_title(f"sensitivity to {param}")
        fig.tight_layout()
        path = out_dir / f"sensitivity_{param}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
