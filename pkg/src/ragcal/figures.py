"""Quick-look matplotlib figures rendered next to the delimited exports.

These are working plots for eyeballing a run (violin distributions split by
correctness, confusion bars), not publication graphics; the CSV exports stay
the canonical plot-ready data.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .contextgen import Mixture, Position
from .metrics import PredictionRecord
from .report import MIXTURE_ORDER, POSITION_ORDER, ConfusionTable, GroupKey


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _groups(records: Sequence[PredictionRecord]) -> list[tuple[Mixture, Position]]:
    seen = {(r.scenario.mixture, r.scenario.position) for r in records}
    return sorted(seen, key=lambda mp: (MIXTURE_ORDER[mp[0]], POSITION_ORDER[mp[1]]))


def render_violin_figure(records: Sequence[PredictionRecord], path: str | Path) -> Path:
    """Violin distributions of entropy and best probability per scenario,
    split by answer correctness."""
    plt = _plt()
    groups = _groups(records)
    if not groups:
        raise ValueError("no records to plot")
    fig, axes = plt.subplots(2, 1, figsize=(max(6, 1.6 * len(groups)), 7), sharex=True)
    for ax, metric, label in (
        (axes[0], lambda r: r.entropy, "entropy (nats)"),
        (axes[1], lambda r: r.best_prob, "best probability"),
    ):
        positions, ticks = [], []
        for i, (mixture, position) in enumerate(groups):
            batch = [r for r in records if (r.scenario.mixture, r.scenario.position) == (mixture, position)]
            for offset, flag, color in ((-0.18, True, "tab:blue"), (0.18, False, "tab:orange")):
                values = [metric(r) for r in batch if r.correct is flag]
                if values:
                    parts = ax.violinplot(
                        [values], positions=[i + offset], widths=0.32, showmedians=True
                    )
                    for body in parts["bodies"]:
                        body.set_facecolor(color)
                        body.set_alpha(0.6)
            positions.append(i)
            tag = mixture.value if mixture is Mixture.NONE else f"{mixture.value}\n{position.value}"
            ticks.append(tag)
        ax.set_ylabel(label)
        ax.set_xticks(positions)
        ax.set_xticklabels(ticks, fontsize=8)
        ax.grid(True, axis="y", alpha=0.3)
    axes[0].set_title("correct (blue) vs incorrect (orange)")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_confusion_figure(
    tables: Sequence[tuple[GroupKey, ConfusionTable]], path: str | Path
) -> Path:
    """Stacked bars of predicted classes per gold class, one panel per scenario."""
    plt = _plt()
    tables = [t for t in tables if t[1].total > 0]
    if not tables:
        raise ValueError("no incorrect predictions to plot")
    ncols = min(4, len(tables))
    nrows = (len(tables) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3 * nrows), squeeze=False)
    cmap = plt.get_cmap("tab10")
    for idx, ((backend, dataset, mixture, position), table) in enumerate(tables):
        ax = axes[idx // ncols][idx % ncols]
        golds = sorted(table.counts)
        bottom = [0] * len(golds)
        for pred in range(table.n_classes):
            heights = [table.counts[g].get(pred, 0) for g in golds]
            if any(heights):
                ax.bar(
                    range(len(golds)),
                    heights,
                    bottom=bottom,
                    color=cmap(pred % 10),
                    label=f"pred {chr(ord('A') + pred)}",
                )
                bottom = [b + h for b, h in zip(bottom, heights)]
        ax.set_xticks(range(len(golds)))
        ax.set_xticklabels([f"gold {chr(ord('A') + g)}" for g in golds], fontsize=8)
        ax.set_title(f"{mixture.value} / {position.value}", fontsize=9)
        ax.legend(fontsize=7)
    for idx in range(len(tables), nrows * ncols):
        axes[idx // ncols][idx % ncols].axis("off")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
