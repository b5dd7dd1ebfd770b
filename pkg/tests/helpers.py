"""Shared test fixtures: tiny datasets and seeded random record sets."""

from __future__ import annotations

import numpy as np

from ragcal import (
    BackendId,
    Mixture,
    Position,
    PredictionRecord,
    QaItem,
    ScenarioSpec,
)

TEST_BACKEND = BackendId(kind="synthetic", name="synthetic-test")


def make_items(n: int, j: int = 4, with_rationale: bool = True) -> list[QaItem]:
    items = []
    for i in range(n):
        items.append(
            QaItem(
                id=f"item-{i:04d}",
                question=f"What is the fact asked by question number {i}?",
                options=tuple(f"option {c} of {i}" for c in "abcdefgh"[:j]),
                gold_index=i % j,
                rationale=(
                    f"Explanatory passage for question {i}: the point under test." if with_rationale else None
                ),
            )
        )
    return items


def make_records(
    rng: np.random.Generator,
    n: int,
    j: int,
    dataset: str = "synthdata",
    mixture: Mixture = Mixture.ANS1,
    position: Position = Position.PRE_Q,
    seed: int = 0,
    spread: float = 2.0,
) -> list[PredictionRecord]:
    """Seeded random records with raw scores ~ N(0, spread)."""
    scenario = (
        ScenarioSpec.baseline(seed)
        if mixture is Mixture.NONE
        else ScenarioSpec(mixture, position, seed)
    )
    records = []
    for i in range(n):
        v = rng.normal(0.0, spread, size=j)
        gold = int(rng.integers(j))
        records.append(
            PredictionRecord.from_scores(
                item_id=f"item-{i:04d}",
                dataset=dataset,
                scenario=scenario,
                backend=TEST_BACKEND,
                gold_index=gold,
                v=v.tolist(),
            )
        )
    return records
