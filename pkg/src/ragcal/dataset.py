"""Loading and validation of multiple-choice QA datasets with rationale passages.

Input files are line-delimited JSON. Three formats are understood:

* ``generic``  -- ``{"id", "question", "options", "gold_index", "rationale"?}``
* ``pubmedqa`` -- original PubMedQA fields (``QUESTION``, ``CONTEXTS``,
  ``final_decision``); options are fixed to yes/no/maybe.
* ``medmcqa``  -- MedMCQA fields (``question``, ``opa``..``opd``, ``cop``,
  ``exp``); ``cop`` is the 0-based index of the correct option.

Loaded items are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

MAX_OPTIONS = 26  # labels must fit single letters A-Z

PUBMEDQA_OPTIONS = ("yes", "no", "maybe")
MEDMCQA_OPTION_FIELDS = ("opa", "opb", "opc", "opd")

DATASET_FORMATS = ("generic", "pubmedqa", "medmcqa")


class DatasetError(ValueError):
    """Malformed dataset file or record."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class QaItem:
    """One multiple-choice question with an optional rationale passage."""

    id: str
    question: str
    options: tuple[str, ...]
    gold_index: int
    rationale: str | None = None
    dataset_tag: str = "generic"

    def __post_init__(self) -> None:
        j = len(self.options)
        if not 2 <= j <= MAX_OPTIONS:
            raise DatasetError(f"item {self.id!r}: needs 2..{MAX_OPTIONS} options, got {j}")
        if not 0 <= self.gold_index < j:
            raise DatasetError(
                f"item {self.id!r}: gold_index {self.gold_index} out of range for {j} options"
            )
        if self.rationale is not None and not self.rationale.strip():
            raise DatasetError(f"item {self.id!r}: rationale present but blank")

    @property
    def n_options(self) -> int:
        return len(self.options)

    @property
    def gold_option(self) -> str:
        return self.options[self.gold_index]


def _require(record: dict, key: str, path: str, line: int) -> object:
    if key not in record:
        raise DatasetError(f"missing field {key!r}", path=path, line=line)
    return record[key]


def _clean_rationale(value: object) -> str | None:
    if value is None:
        return None
    text = str(value)
    return text if text.strip() else None


def _parse_generic(record: dict, path: str, line: int) -> QaItem:
    options = _require(record, "options", path, line)
    if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
        raise DatasetError("'options' must be a list of strings", path=path, line=line)
    if "gold_index" in record:
        gold = record["gold_index"]
        if not isinstance(gold, int) or isinstance(gold, bool):
            raise DatasetError("'gold_index' must be an integer", path=path, line=line)
    elif "gold" in record:
        # Convenience alias: an index, or the exact text of the correct option.
        gold = record["gold"]
        if isinstance(gold, str):
            if gold not in options:
                raise DatasetError(
                    f"gold answer {gold!r} not among options", path=path, line=line
                )
            gold = options.index(gold)
        elif not isinstance(gold, int) or isinstance(gold, bool):
            raise DatasetError("'gold' must be an index or option text", path=path, line=line)
    else:
        raise DatasetError("missing field 'gold_index'", path=path, line=line)
    return QaItem(
        id=str(_require(record, "id", path, line)),
        question=str(_require(record, "question", path, line)),
        options=tuple(options),
        gold_index=gold,
        rationale=_clean_rationale(record.get("rationale")),
        dataset_tag="generic",
    )


def _parse_pubmedqa(record: dict, path: str, line: int) -> QaItem:
    item_id = record.get("id", record.get("pubid"))
    if item_id is None:
        raise DatasetError("missing field 'id' (or 'pubid')", path=path, line=line)
    decision = str(_require(record, "final_decision", path, line)).strip().lower()
    if decision not in PUBMEDQA_OPTIONS:
        raise DatasetError(
            f"gold answer {decision!r} not among options {list(PUBMEDQA_OPTIONS)}",
            path=path,
            line=line,
        )
    contexts = record.get("CONTEXTS", [])
    if isinstance(contexts, str):
        contexts = [contexts]
    # Multi-paragraph contexts are joined with a blank line into one passage.
    rationale = _clean_rationale("\n\n".join(str(c) for c in contexts))
    return QaItem(
        id=str(item_id),
        question=str(_require(record, "QUESTION", path, line)),
        options=PUBMEDQA_OPTIONS,
        gold_index=PUBMEDQA_OPTIONS.index(decision),
        rationale=rationale,
        dataset_tag="pubmedqa",
    )


def _parse_medmcqa(record: dict, path: str, line: int) -> QaItem:
    options = tuple(str(_require(record, f, path, line)) for f in MEDMCQA_OPTION_FIELDS)
    cop = _require(record, "cop", path, line)
    if not isinstance(cop, int) or isinstance(cop, bool) or not 0 <= cop < len(options):
        raise DatasetError(f"'cop' must be an index in 0..3, got {cop!r}", path=path, line=line)
    return QaItem(
        id=str(_require(record, "id", path, line)),
        question=str(_require(record, "question", path, line)),
        options=options,
        gold_index=cop,
        rationale=_clean_rationale(record.get("exp")),
        dataset_tag="medmcqa",
    )


_PARSERS = {
    "generic": _parse_generic,
    "pubmedqa": _parse_pubmedqa,
    "medmcqa": _parse_medmcqa,
}


def load_dataset(path: str | Path, format: str = "generic") -> list[QaItem]:
    """Load a line-delimited JSON dataset into validated QaItems.

    Raises DatasetError with the offending 1-based line number for malformed
    records, gold answers not among the options, and duplicate ids.
    """
    if format not in _PARSERS:
        raise DatasetError(f"unknown dataset format {format!r}; expected one of {DATASET_FORMATS}")
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    parser = _PARSERS[format]
    items: list[QaItem] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON ({exc.msg})", path=str(path), line=line_no)
            if not isinstance(record, dict):
                raise DatasetError("record must be a JSON object", path=str(path), line=line_no)
            try:
                item = parser(record, str(path), line_no)
            except DatasetError:
                raise
            except ValueError as exc:
                raise DatasetError(str(exc), path=str(path), line=line_no)
            if item.id in seen:
                raise DatasetError(f"duplicate id {item.id!r}", path=str(path), line=line_no)
            seen.add(item.id)
            items.append(item)
    return items


def filter_with_rationale(items: Iterable[QaItem]) -> list[QaItem]:
    """Keep only items carrying a non-empty rationale, preserving order.

    This reproduces rationale-bearing extract subsets of datasets whose
    records only sometimes include an explanation.
    """
    return [item for item in items if item.rationale is not None and item.rationale.strip()]


def dump_dataset(items: Sequence[QaItem], path: str | Path) -> None:
    """Serialize items to the generic line-delimited JSON schema."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for item in items:
            record = {
                "id": item.id,
                "question": item.question,
                "options": list(item.options),
                "gold_index": item.gold_index,
            }
            if item.rationale is not None:
                record["rationale"] = item.rationale
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
