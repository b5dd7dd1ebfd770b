"""Aggregation of prediction records into tables and plot-ready exports.

Per (backend, dataset, mixture, position) group: correct/incorrect split of
entropy and best probability (mean and population std), accuracy, ECE, ACE,
and signed deltas against the same backend/dataset's no-document baseline.
Also: confusion tables over incorrect predictions and a long-format CSV for
violin plots.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .contextgen import Mixture, Position
from .metrics import MetricConfig, PredictionRecord, ace, ece

MIXTURE_ORDER = {m: i for i, m in enumerate((Mixture.NONE, Mixture.ANS1, Mixture.ANS1_OTH2, Mixture.OTH3))}
POSITION_ORDER = {p: i for i, p in enumerate((Position.NONE, Position.PRE_Q, Position.AFT_Q, Position.AFT_C))}

ABSENT = "--"

GroupKey = tuple[str, str, Mixture, Position]


@dataclass(frozen=True)
class MetricReport:
    """Aggregated metrics for one (backend, dataset, mixture, position) group."""

    backend: str
    dataset: str
    mixture: Mixture
    position: Position
    n_correct: int
    n_incorrect: int
    accuracy: float
    ece: float
    ace: float
    entropy_correct_mean: float | None
    entropy_correct_std: float | None
    entropy_incorrect_mean: float | None
    entropy_incorrect_std: float | None
    best_prob_correct_mean: float | None
    best_prob_correct_std: float | None
    best_prob_incorrect_mean: float | None
    best_prob_incorrect_std: float | None
    delta_accuracy: float | None = None
    delta_ace: float | None = None

    @property
    def n(self) -> int:
        return self.n_correct + self.n_incorrect


@dataclass(frozen=True)
class ConfusionTable:
    """Distribution of predicted classes among incorrect records, by gold class."""

    n_classes: int
    counts: dict[int, dict[int, int]]

    def row(self, gold: int) -> dict[int, int]:
        return dict(self.counts.get(gold, {}))

    @property
    def total(self) -> int:
        return sum(sum(row.values()) for row in self.counts.values())


def _group_key(record: PredictionRecord) -> GroupKey:
    return (
        record.backend.name,
        record.dataset,
        record.scenario.mixture,
        record.scenario.position,
    )


def _sort_key(key: GroupKey) -> tuple:
    backend, dataset, mixture, position = key
    return (dataset, backend, MIXTURE_ORDER[mixture], POSITION_ORDER[position])


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std())  # population std


def aggregate(
    records: Sequence[PredictionRecord], config: MetricConfig = MetricConfig()
) -> list[MetricReport]:
    """One report per group, deterministically ordered, with baseline deltas.

    Deltas are attached to document-bearing groups whenever the same
    backend/dataset has a no-document baseline group; baseline rows carry no
    deltas (they are the reference).
    """
    groups: dict[GroupKey, list[PredictionRecord]] = {}
    for record in records:
        groups.setdefault(_group_key(record), []).append(record)

    reports: dict[GroupKey, MetricReport] = {}
    for key in sorted(groups, key=_sort_key):
        batch = groups[key]
        sizes = {r.n_options for r in batch}
        if len(sizes) > 1:
            raise ValueError(f"group {key} mixes option counts {sorted(sizes)}")
        correct = [r for r in batch if r.correct]
        incorrect = [r for r in batch if not r.correct]
        ent_c = _mean_std([r.entropy for r in correct])
        ent_i = _mean_std([r.entropy for r in incorrect])
        bp_c = _mean_std([r.best_prob for r in correct])
        bp_i = _mean_std([r.best_prob for r in incorrect])
        reports[key] = MetricReport(
            backend=key[0],
            dataset=key[1],
            mixture=key[2],
            position=key[3],
            n_correct=len(correct),
            n_incorrect=len(incorrect),
            accuracy=len(correct) / len(batch),
            ece=ece(batch, config.ece_bins),
            ace=ace(batch, config.ace_bins),
            entropy_correct_mean=ent_c[0],
            entropy_correct_std=ent_c[1],
            entropy_incorrect_mean=ent_i[0],
            entropy_incorrect_std=ent_i[1],
            best_prob_correct_mean=bp_c[0],
            best_prob_correct_std=bp_c[1],
            best_prob_incorrect_mean=bp_i[0],
            best_prob_incorrect_std=bp_i[1],
        )

    out: list[MetricReport] = []
    for key in sorted(reports, key=_sort_key):
        report = reports[key]
        baseline_key = (key[0], key[1], Mixture.NONE, Position.NONE)
        if key[2] is not Mixture.NONE and baseline_key in reports:
            base = reports[baseline_key]
            report = replace(
                report,
                delta_accuracy=report.accuracy - base.accuracy,
                delta_ace=report.ace - base.ace,
            )
        out.append(report)
    return out


def error_confusion(records: Sequence[PredictionRecord]) -> ConfusionTable:
    """Tabulate how incorrect predictions distribute over predicted classes."""
    sizes = {r.n_options for r in records}
    if len(sizes) > 1:
        raise ValueError(f"confusion table needs a shared class count, got {sorted(sizes)}")
    n_classes = sizes.pop() if sizes else 0
    counts: dict[int, dict[int, int]] = {}
    for record in records:
        if record.correct:
            continue
        row = counts.setdefault(record.gold_index, {})
        row[record.chosen_index] = row.get(record.chosen_index, 0) + 1
    return ConfusionTable(n_classes=n_classes, counts=counts)


def _violin_sort_key(record: PredictionRecord) -> tuple:
    return (
        record.backend.name,
        record.dataset,
        MIXTURE_ORDER[record.scenario.mixture],
        POSITION_ORDER[record.scenario.position],
        record.item_id,
    )


VIOLIN_COLUMNS = (
    "item_id",
    "backend",
    "dataset",
    "mixture",
    "position",
    "correct",
    "entropy",
    "best_prob",
)


def export_violin(records: Sequence[PredictionRecord], path: str | Path) -> None:
    """Write the long-format per-record CSV that violin plots are drawn from.

    Row order is deterministic (group, then item id); floats are written with
    full precision so downstream aggregation reproduces the reports exactly.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(VIOLIN_COLUMNS)
        for record in sorted(records, key=_violin_sort_key):
            writer.writerow(
                [
                    record.item_id,
                    record.backend.name,
                    record.dataset,
                    record.scenario.mixture.value,
                    record.scenario.position.value,
                    str(record.correct).lower(),
                    repr(record.entropy),
                    repr(record.best_prob),
                ]
            )


def _fmt(value: float | None, digits: int | None = None) -> str:
    if value is None:
        return ABSENT
    if digits is None:
        return repr(value)
    return f"{value:.{digits}f}"


def _fmt_pair(mean: float | None, std: float | None, digits: int = 4) -> str:
    if mean is None:
        return ABSENT
    return f"{mean:.{digits}f}±{std:.{digits}f}"


REPORT_COLUMNS = (
    "backend",
    "dataset",
    "mixture",
    "position",
    "n",
    "n_correct",
    "n_incorrect",
    "accuracy",
    "ece",
    "ace",
    "delta_accuracy",
    "delta_ace",
    "entropy_correct_mean",
    "entropy_correct_std",
    "entropy_incorrect_mean",
    "entropy_incorrect_std",
    "best_prob_correct_mean",
    "best_prob_correct_std",
    "best_prob_incorrect_mean",
    "best_prob_incorrect_std",
)


def write_report_csv(reports: Sequence[MetricReport], path: str | Path) -> None:
    """Machine-readable report table (full-precision floats, '--' for absent)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow(
                [
                    r.backend,
                    r.dataset,
                    r.mixture.value,
                    r.position.value,
                    r.n,
                    r.n_correct,
                    r.n_incorrect,
                    _fmt(r.accuracy),
                    _fmt(r.ece),
                    _fmt(r.ace),
                    _fmt(r.delta_accuracy),
                    _fmt(r.delta_ace),
                    _fmt(r.entropy_correct_mean),
                    _fmt(r.entropy_correct_std),
                    _fmt(r.entropy_incorrect_mean),
                    _fmt(r.entropy_incorrect_std),
                    _fmt(r.best_prob_correct_mean),
                    _fmt(r.best_prob_correct_std),
                    _fmt(r.best_prob_incorrect_mean),
                    _fmt(r.best_prob_incorrect_std),
                ]
            )


def render_markdown(reports: Sequence[MetricReport]) -> str:
    """Human-readable aligned Markdown table (4 decimal places, mean±std)."""
    header = [
        "Backend",
        "Dataset",
        "Mixture",
        "Position",
        "N",
        "Acc",
        "ECE",
        "ACE",
        "ΔAcc",
        "ΔACE",
        "Entropy (C)",
        "Entropy (I)",
        "BestProb (C)",
        "BestProb (I)",
    ]
    rows = [header]
    for r in reports:
        rows.append(
            [
                r.backend,
                r.dataset,
                r.mixture.value,
                r.position.value,
                str(r.n),
                _fmt(r.accuracy, 4),
                _fmt(r.ece, 4),
                _fmt(r.ace, 4),
                _fmt(r.delta_accuracy, 4),
                _fmt(r.delta_ace, 4),
                _fmt_pair(r.entropy_correct_mean, r.entropy_correct_std),
                _fmt_pair(r.entropy_incorrect_mean, r.entropy_incorrect_std),
                _fmt_pair(r.best_prob_correct_mean, r.best_prob_correct_std),
                _fmt_pair(r.best_prob_incorrect_mean, r.best_prob_incorrect_std),
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for idx, row in enumerate(rows):
        lines.append("| " + " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) + " |")
        if idx == 0:
            lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
    return "\n".join(lines) + "\n"


def write_report_markdown(reports: Sequence[MetricReport], path: str | Path) -> None:
    Path(path).write_text(render_markdown(reports), encoding="utf-8", newline="\n")


def write_confusion_csv(
    tables: Iterable[tuple[GroupKey, ConfusionTable]], path: str | Path
) -> None:
    """Long-format confusion export: one row per (group, gold, predicted) cell."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["backend", "dataset", "mixture", "position", "gold_label", "predicted_label", "count"]
        )
        for (backend, dataset, mixture, position), table in tables:
            for gold in sorted(table.counts):
                for pred in sorted(table.counts[gold]):
                    writer.writerow(
                        [
                            backend,
                            dataset,
                            mixture.value,
                            position.value,
                            chr(ord("A") + gold),
                            chr(ord("A") + pred),
                            table.counts[gold][pred],
                        ]
                    )


def confusion_by_group(
    records: Sequence[PredictionRecord],
) -> list[tuple[GroupKey, ConfusionTable]]:
    """Confusion tables per (backend, dataset, mixture, position) group."""
    groups: dict[GroupKey, list[PredictionRecord]] = {}
    for record in records:
        groups.setdefault(_group_key(record), []).append(record)
    return [(key, error_confusion(groups[key])) for key in sorted(groups, key=_sort_key)]
