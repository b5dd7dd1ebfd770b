"""Pseudo-RAG context construction.

Instead of running a retriever, document sets are built deliberately: the
target item's own rationale passage (answer-bearing) and/or rationale
passages sampled from unrelated items (distractors). Sampling is seeded and
keyed per item, so results are reproducible and editing the dataset never
perturbs other items' draws.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from ._hash import stable_hash64
from .dataset import QaItem


class Mixture(enum.Enum):
    """Which documents are inserted into the prompt."""

    NONE = "none"            # baseline, no documents
    ANS1 = "ans1"            # the target's rationale only
    ANS1_OTH2 = "ans1-oth2"  # rationale plus two distractors
    OTH3 = "oth3"            # three distractors

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.value

    @property
    def doc_count(self) -> int:
        return {Mixture.NONE: 0, Mixture.ANS1: 1, Mixture.ANS1_OTH2: 3, Mixture.OTH3: 3}[self]

    @property
    def needs_rationale(self) -> bool:
        return self in (Mixture.ANS1, Mixture.ANS1_OTH2)


class Position(enum.Enum):
    """Where the document block is inserted into the prompt.

    ``NONE`` is the canonical tag for the baseline (no documents); it is never
    a valid insertion slot.
    """

    NONE = "none"
    PRE_Q = "pre-q"
    AFT_Q = "aft-q"
    AFT_C = "aft-c"

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.value


INSERTION_POSITIONS = (Position.PRE_Q, Position.AFT_Q, Position.AFT_C)
DOC_MIXTURES = (Mixture.ANS1, Mixture.ANS1_OTH2, Mixture.OTH3)


class ContextGenError(ValueError):
    """Cannot build the requested document set."""


class InsufficientPoolError(ContextGenError):
    """Fewer eligible distractor items than requested."""


@dataclass(frozen=True)
class ScenarioSpec:
    """One experimental condition: document mixture, insertion slot, seed."""

    mixture: Mixture
    position: Position
    seed: int

    def __post_init__(self) -> None:
        baseline = self.mixture is Mixture.NONE
        if baseline != (self.position is Position.NONE):
            raise ValueError(
                "baseline mixture must use the canonical 'none' position and vice versa"
            )

    @classmethod
    def baseline(cls, seed: int) -> "ScenarioSpec":
        return cls(Mixture.NONE, Position.NONE, seed)


@dataclass(frozen=True)
class ContextDoc:
    """One passage inserted into the prompt."""

    source_item_id: str
    text: str
    answer_bearing: bool

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ContextGenError(f"empty context doc from item {self.source_item_id!r}")


def sample_distractors(
    pool: Sequence[QaItem], target_id: str, k: int, seed: int
) -> list[ContextDoc]:
    """Draw k distractor passages from items other than the target.

    Selection is by a per-item priority hash, so the result depends only on
    the set of eligible items, never on the order of the pool. Docs are
    returned in priority order.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    eligible = [
        item
        for item in pool
        if item.id != target_id and item.rationale is not None and item.rationale.strip()
    ]
    if len(eligible) < k:
        raise InsufficientPoolError(
            f"insufficient distractor pool for item {target_id!r}: "
            f"need {k}, have {len(eligible)} eligible items"
        )
    ranked = sorted(eligible, key=lambda item: (stable_hash64(seed, target_id, item.id), item.id))
    return [
        ContextDoc(source_item_id=item.id, text=item.rationale, answer_bearing=False)
        for item in ranked[:k]
    ]


def build_context(
    item: QaItem,
    mixture: Mixture,
    pool: Sequence[QaItem] = (),
    seed: int = 0,
    answer_doc_first: bool = True,
) -> list[ContextDoc]:
    """Build the document list for one item under one mixture.

    The distractor draw is seeded with ``seed`` mixed with the item id, so
    adding or removing other items from the dataset never changes this item's
    distractors. ``answer_doc_first`` controls where the rationale sits inside
    the ans1-oth2 mixture (the protocol does not pin intra-block order; the
    default keeps runs comparable).
    """
    if mixture.needs_rationale and (item.rationale is None or not item.rationale.strip()):
        raise ContextGenError(
            f"item {item.id!r} has no rationale; required for mixture {mixture.value!r}"
        )
    if mixture is Mixture.NONE:
        return []

    item_seed = stable_hash64(seed, item.id)
    answer_doc = None
    if mixture.needs_rationale:
        answer_doc = ContextDoc(source_item_id=item.id, text=item.rationale, answer_bearing=True)

    if mixture is Mixture.ANS1:
        return [answer_doc]
    if mixture is Mixture.ANS1_OTH2:
        distractors = sample_distractors(pool, item.id, 2, item_seed)
        return [answer_doc, *distractors] if answer_doc_first else [*distractors, answer_doc]
    if mixture is Mixture.OTH3:
        return sample_distractors(pool, item.id, 3, item_seed)
    raise ValueError(f"unknown mixture {mixture!r}")


def answer_doc_present(docs: Iterable[ContextDoc]) -> bool:
    return any(doc.answer_bearing for doc in docs)
