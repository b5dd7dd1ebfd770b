"""Experiment orchestration: expand the (item x mixture x position) grid,
score every cell with caching, and write records plus aggregated reports.

The no-document baseline is evaluated once per item under the canonical
'none' position tag. Raw scores are cached append-only per backend and keyed
by (backend name, prompt text, labels), so a rerun against an intact cache
performs zero backend calls and reproduces identical outputs byte for byte.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from ._hash import content_key
from .backends import Backend, BackendId, RemoteBackend, SyntheticBackend, SyntheticConfig, score_options
from .contextgen import (
    DOC_MIXTURES,
    INSERTION_POSITIONS,
    Mixture,
    Position,
    ScenarioSpec,
    build_context,
)
from .dataset import QaItem, filter_with_rationale, load_dataset
from .metrics import MetricConfig, PredictionRecord
from .prompt import DEFAULT_TEMPLATE, PromptTemplate, render_prompt
from .report import aggregate, confusion_by_group, export_violin, write_confusion_csv, write_report_csv, write_report_markdown

RECORDS_FILE = "records.jsonl"
REPORT_CSV_FILE = "report.csv"
REPORT_MD_FILE = "report.md"
VIOLIN_FILE = "violin.csv"
CONFUSION_FILE = "confusion.csv"
MANIFEST_FILE = "manifest.json"

CACHE_VERSION = "score-cache-v1"


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; flags and config files both build one of these."""

    dataset: str
    dataset_format: str = "generic"
    backend: str = "synthetic"
    endpoint: str | None = None
    model: str | None = None
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    mixtures: tuple[Mixture, ...] = (Mixture.NONE, Mixture.ANS1, Mixture.ANS1_OTH2, Mixture.OTH3)
    positions: tuple[Position, ...] = INSERTION_POSITIONS
    seed: int = 0
    metrics: MetricConfig = field(default_factory=MetricConfig)
    cache_dir: str = ".ragcal-cache"
    out_dir: str = "ragcal-run"
    concurrency: int = 4
    resume: bool = False
    rationale_only: bool = True
    answer_doc_first: bool = True
    system_prompt: str | None = None
    template: PromptTemplate = DEFAULT_TEMPLATE
    figures: bool = True
    limit: int | None = None

    def __post_init__(self) -> None:
        if not self.mixtures:
            raise ValueError("at least one mixture is required")
        if not self.positions:
            raise ValueError("at least one position is required")
        if Position.NONE in self.positions:
            raise ValueError("'none' is the baseline tag, not an insertion position")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.backend not in ("synthetic", "remote"):
            raise ValueError(f"unknown backend kind {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ValueError("remote backend needs --endpoint")

    def expected_records(self, n_items: int) -> int:
        doc_mixtures = [m for m in self.mixtures if m is not Mixture.NONE]
        per_item = len(doc_mixtures) * len(self.positions) + (Mixture.NONE in self.mixtures)
        return n_items * per_item


def cache_key(backend_name: str, prompt_text: str, labels: Sequence[str]) -> str:
    """Deterministic, label-order-sensitive, 128-bit content key."""
    return content_key(CACHE_VERSION, backend_name, prompt_text, *labels)


class ScoreCache:
    """Append-only JSONL score cache; a corrupt line invalidates only itself."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[str, list[float]] = {}
        self._lock = threading.Lock()
        self._handle = None
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as handle:
                for raw in handle:
                    try:
                        entry = json.loads(raw)
                        key, value = entry["key"], [float(x) for x in entry["v"]]
                    except (ValueError, KeyError, TypeError):
                        continue  # damaged line; the cell will just be re-scored
                    self._entries[key] = value

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> list[float] | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, v: Sequence[float]) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = list(v)
            if self._handle is None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self._handle = self.path.open("a", encoding="utf-8")
            self._handle.write(
                json.dumps({"key": key, "v": list(map(float, v)), "ts": time.time()}) + "\n"
            )
            self._handle.flush()

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None


@dataclass(frozen=True)
class GridCell:
    index: int
    item: QaItem
    scenario: ScenarioSpec


@dataclass
class RunResult:
    records: list[PredictionRecord]
    failures: list[dict]
    out_dir: Path
    expected: int

    @property
    def complete(self) -> bool:
        return not self.failures and len(self.records) == self.expected


def build_backend(config: RunConfig, items: Sequence[QaItem]) -> Backend:
    if config.backend == "synthetic":
        return SyntheticBackend(config.synthetic, items)
    return RemoteBackend(config.endpoint, model=config.model)


def expand_grid(config: RunConfig, items: Sequence[QaItem]) -> list[GridCell]:
    """Deterministic cell list: items in file order, baseline first, then
    document mixtures crossed with positions."""
    cells: list[GridCell] = []
    doc_mixtures = [m for m in DOC_MIXTURES if m in config.mixtures]
    for item in items:
        if Mixture.NONE in config.mixtures:
            cells.append(GridCell(len(cells), item, ScenarioSpec.baseline(config.seed)))
        for mixture in doc_mixtures:
            for position in config.positions:
                cells.append(
                    GridCell(len(cells), item, ScenarioSpec(mixture, position, config.seed))
                )
    return cells


def _score_cell(
    cell: GridCell,
    config: RunConfig,
    pool: Sequence[QaItem],
    backend: Backend,
    cache: ScoreCache,
    dataset_tag: str,
) -> PredictionRecord:
    docs = build_context(
        cell.item,
        cell.scenario.mixture,
        pool,
        seed=config.seed,
        answer_doc_first=config.answer_doc_first,
    )
    prompt = render_prompt(
        cell.item,
        docs,
        cell.scenario.position,
        system_prompt=config.system_prompt,
        template=config.template,
        scenario=cell.scenario,
    )
    key = cache_key(backend.id.name, prompt.text, prompt.labels)
    v = cache.get(key)
    if v is None:
        v = score_options(backend, prompt)
        cache.put(key, v)
    return PredictionRecord.from_scores(
        item_id=cell.item.id,
        dataset=dataset_tag,
        scenario=cell.scenario,
        backend=backend.id,
        gold_index=cell.item.gold_index,
        v=v,
    )


def record_to_json(record: PredictionRecord) -> dict:
    return {
        "item_id": record.item_id,
        "dataset": record.dataset,
        "mixture": record.scenario.mixture.value,
        "position": record.scenario.position.value,
        "seed": record.scenario.seed,
        "backend_kind": record.backend.kind,
        "backend_name": record.backend.name,
        "chosen_index": record.chosen_index,
        "gold_index": record.gold_index,
        "correct": record.correct,
        "entropy": record.entropy,
        "best_prob": record.best_prob,
        "p": list(record.p),
    }


def record_from_json(data: dict) -> PredictionRecord:
    return PredictionRecord(
        item_id=data["item_id"],
        dataset=data["dataset"],
        scenario=ScenarioSpec(
            Mixture(data["mixture"]), Position(data["position"]), int(data["seed"])
        ),
        backend=BackendId(kind=data["backend_kind"], name=data["backend_name"]),
        chosen_index=int(data["chosen_index"]),
        gold_index=int(data["gold_index"]),
        correct=bool(data["correct"]),
        entropy=float(data["entropy"]),
        best_prob=float(data["best_prob"]),
        p=tuple(float(x) for x in data["p"]),
    )


def load_records(path: str | Path) -> list[PredictionRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for raw in handle:
            if raw.strip():
                records.append(record_from_json(json.loads(raw)))
    return records


def write_records(records: Sequence[PredictionRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record_to_json(record)) + "\n")


def export_outputs(
    records: Sequence[PredictionRecord],
    out_dir: str | Path,
    metrics: MetricConfig = MetricConfig(),
    figures: bool = True,
) -> list[Path]:
    """Write the report tables, violin data, confusion export, and figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = aggregate(records, metrics)
    written = []
    write_report_csv(reports, out_dir / REPORT_CSV_FILE)
    written.append(out_dir / REPORT_CSV_FILE)
    write_report_markdown(reports, out_dir / REPORT_MD_FILE)
    written.append(out_dir / REPORT_MD_FILE)
    export_violin(records, out_dir / VIOLIN_FILE)
    written.append(out_dir / VIOLIN_FILE)
    tables = confusion_by_group(records)
    write_confusion_csv(tables, out_dir / CONFUSION_FILE)
    written.append(out_dir / CONFUSION_FILE)
    if figures and records:
        from .figures import render_confusion_figure, render_violin_figure

        written.append(render_violin_figure(records, out_dir / "violin.png"))
        if any(not r.correct for r in records):
            written.append(render_confusion_figure(tables, out_dir / "confusion.png"))
    return written


def _config_echo(config: RunConfig) -> dict:
    echo = asdict(config)
    echo["mixtures"] = [m.value for m in config.mixtures]
    echo["positions"] = [p.value for p in config.positions]
    return echo


def run_grid(config: RunConfig, backend: Backend | None = None) -> RunResult:
    """Execute the full grid and write the run directory.

    Failed cells are recorded in the manifest instead of aborting the run;
    a rerun with ``resume=True`` scores only the cells that are not yet in
    ``records.jsonl``.
    """
    all_items = load_dataset(config.dataset, config.dataset_format)
    pool = filter_with_rationale(all_items)
    needs_docs = any(m is not Mixture.NONE for m in config.mixtures)
    items = pool if (config.rationale_only and needs_docs) else all_items
    if config.limit is not None:
        items = items[: config.limit]
    dataset_tag = items[0].dataset_tag if items else config.dataset_format

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if backend is None:
        backend = build_backend(config, items)
    cache = ScoreCache(Path(config.cache_dir) / f"{backend.id.name}.jsonl")

    cells = expand_grid(config, items)
    done: dict[tuple[str, Mixture, Position], PredictionRecord] = {}
    records_path = out_dir / RECORDS_FILE
    if config.resume and records_path.exists():
        for record in load_records(records_path):
            done[(record.item_id, record.scenario.mixture, record.scenario.position)] = record

    slots: list[PredictionRecord | None] = [None] * len(cells)
    failures: list[dict] = []
    failures_lock = threading.Lock()

    def work(cell: GridCell) -> None:
        key = (cell.item.id, cell.scenario.mixture, cell.scenario.position)
        if key in done:
            slots[cell.index] = done[key]
            return
        try:
            slots[cell.index] = _score_cell(cell, config, pool, backend, cache, dataset_tag)
        except Exception as exc:
            with failures_lock:
                failures.append(
                    {
                        "item_id": cell.item.id,
                        "mixture": cell.scenario.mixture.value,
                        "position": cell.scenario.position.value,
                        "error": f"{type(exc).__name__}: {exc}",
                    }
                )

    try:
        if config.concurrency == 1:
            for cell in cells:
                work(cell)
        else:
            with ThreadPoolExecutor(max_workers=config.concurrency) as pool_exec:
                list(pool_exec.map(work, cells))
    finally:
        cache.close()

    records = [r for r in slots if r is not None]
    failures.sort(key=lambda f: (f["item_id"], f["mixture"], f["position"]))
    write_records(records, records_path)
    export_outputs(records, out_dir, config.metrics, figures=config.figures)

    manifest = {
        "config": _config_echo(config),
        "backend": {"kind": backend.id.kind, "name": backend.id.name},
        "n_items": len(items),
        "expected_records": config.expected_records(len(items)),
        "completed_records": len(records),
        "complete": not failures and len(records) == config.expected_records(len(items)),
        "failed_cells": failures,
    }
    (out_dir / MANIFEST_FILE).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return RunResult(
        records=records,
        failures=failures,
        out_dir=out_dir,
        expected=config.expected_records(len(items)),
    )
