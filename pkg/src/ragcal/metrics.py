"""Evaluation mathematics: softmax normalization, entropy, best probability,
accuracy, expected calibration error, and adaptive calibration error.

All quantities use the natural log. Confidence for ECE is the probability of
the chosen (top) label; ACE is class-conditional over the full probability
vectors, with equal-mass bins per class.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backends import BackendId
from .contextgen import ScenarioSpec

PROB_SUM_TOL = 1e-9


def normalize(v: Sequence[float]) -> np.ndarray:
    """Softmax the raw log-scores into a probability vector.

    Max-shifted for numerical stability; mathematically identical to
    exp(v_i) / sum_j exp(v_j).
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot normalize an empty score vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite score in {arr.tolist()}")
    shifted = np.exp(arr - arr.max())
    return shifted / shifted.sum()


def _check_distribution(p: Sequence[float]) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty probability vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"invalid probability vector {arr.tolist()}")
    if abs(arr.sum() - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probabilities sum to {arr.sum()!r}, not 1")
    return arr


def entropy(p: Sequence[float]) -> float:
    """Shannon entropy in nats, with 0*ln(0) taken as 0."""
    arr = _check_distribution(p)
    nonzero = arr[arr > 0.0]
    return float(-(nonzero * np.log(nonzero)).sum())


def best_prob(p: Sequence[float]) -> tuple[int, float]:
    """Index and probability of the top label; ties go to the lowest index."""
    arr = _check_distribution(p)
    index = int(np.argmax(arr))
    return index, float(arr[index])


@dataclass(frozen=True)
class OptionScores:
    """Raw log-scores and their normalized probabilities for one prompt."""

    v: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.v) != len(self.p):
            raise ValueError("v and p must have the same length")
        arr = _check_distribution(self.p)
        # Score differences below exp's resolution collapse to exact ties in
        # p, so the check is "the raw argmax attains the max probability".
        if arr[int(np.argmax(np.asarray(self.v)))] != arr.max():
            raise ValueError("argmax of raw scores does not attain the max probability")

    @classmethod
    def from_raw(cls, v: Sequence[float]) -> "OptionScores":
        p = normalize(v)
        return cls(v=tuple(float(x) for x in v), p=tuple(float(x) for x in p))


@dataclass(frozen=True)
class PredictionRecord:
    """The unit of analysis: one item scored under one scenario."""

    item_id: str
    dataset: str
    scenario: ScenarioSpec
    backend: BackendId
    chosen_index: int
    gold_index: int
    correct: bool
    entropy: float
    best_prob: float
    p: tuple[float, ...]

    def __post_init__(self) -> None:
        j = len(self.p)
        arr = _check_distribution(self.p)
        if self.chosen_index != int(np.argmax(arr)):
            raise ValueError("chosen_index must be the (lowest-index) argmax of p")
        if not 0 <= self.gold_index < j:
            raise ValueError(f"gold_index {self.gold_index} out of range for {j} classes")
        if self.correct != (self.chosen_index == self.gold_index):
            raise ValueError("correct flag disagrees with chosen vs gold")
        if not -1e-9 <= self.entropy <= math.log(j) + 1e-9:
            raise ValueError(f"entropy {self.entropy} outside [0, ln {j}]")
        if not 1.0 / j - 1e-9 <= self.best_prob <= 1.0 + 1e-9:
            raise ValueError(f"best_prob {self.best_prob} outside [1/{j}, 1]")

    @property
    def n_options(self) -> int:
        return len(self.p)

    @classmethod
    def from_scores(
        cls,
        item_id: str,
        dataset: str,
        scenario: ScenarioSpec,
        backend: BackendId,
        gold_index: int,
        v: Sequence[float],
    ) -> "PredictionRecord":
        scores = OptionScores.from_raw(v)
        chosen, top = best_prob(scores.p)
        return cls(
            item_id=item_id,
            dataset=dataset,
            scenario=scenario,
            backend=backend,
            chosen_index=chosen,
            gold_index=gold_index,
            correct=chosen == gold_index,
            entropy=entropy(scores.p),
            best_prob=top,
            p=scores.p,
        )


@dataclass(frozen=True)
class MetricConfig:
    """Binning configuration; the log base is fixed to natural log."""

    ece_bins: int = 10
    ace_bins: int = 10

    def __post_init__(self) -> None:
        if self.ece_bins < 1 or self.ace_bins < 1:
            raise ValueError("bin counts must be >= 1")


@dataclass(frozen=True)
class CalibrationBin:
    count: int
    conf: float
    acc: float


def accuracy(records: Sequence[PredictionRecord]) -> float:
    """Fraction of records whose chosen label is the gold label."""
    if not records:
        raise ValueError("accuracy of an empty record set is undefined")
    return sum(1 for r in records if r.correct) / len(records)


def calibration_bins(records: Sequence[PredictionRecord], bins: int) -> list[CalibrationBin]:
    """Equal-width confidence bins over [0, 1] (last bin right-closed)."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not records:
        raise ValueError("cannot bin an empty record set")
    conf = np.array([r.best_prob for r in records])
    correct = np.array([r.correct for r in records], dtype=np.float64)
    idx = np.minimum((conf * bins).astype(int), bins - 1)
    out = []
    for m in range(bins):
        mask = idx == m
        count = int(mask.sum())
        if count == 0:
            out.append(CalibrationBin(count=0, conf=0.0, acc=0.0))
        else:
            out.append(
                CalibrationBin(
                    count=count,
                    conf=float(conf[mask].mean()),
                    acc=float(correct[mask].mean()),
                )
            )
    return out


def ece(records: Sequence[PredictionRecord], bins: int = 10) -> float:
    """Expected calibration error: bin-mass-weighted |accuracy - confidence|.

    Confidence is the chosen label's probability. Empty bins contribute 0.
    """
    n = len(records)
    total = 0.0
    for b in calibration_bins(records, bins):
        if b.count:
            total += (b.count / n) * abs(b.acc - b.conf)
    return total


def ace(records: Sequence[PredictionRecord], bins: int = 10, n_classes: int | None = None) -> float:
    """Adaptive calibration error: per-class equal-mass bins.

    For every class k, all records are ordered by p[k] (stable) and split into
    ``bins`` contiguous groups whose sizes differ by at most one (larger
    groups first); the gap |fraction-gold-is-k - mean p[k]| is averaged over
    classes and bins. ``bins`` greater than the record count is clamped with
    a warning.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not records:
        raise ValueError("cannot compute ACE on an empty record set")
    if n_classes is None:
        n_classes = records[0].n_options
    n = len(records)
    if any(r.n_options != n_classes for r in records):
        raise ValueError("all records must share the same class count")
    if bins > n:
        warnings.warn(
            f"ACE bins ({bins}) exceed record count ({n}); clamping to {n}",
            stacklevel=2,
        )
        bins = n
    probs = np.array([r.p for r in records])
    golds = np.array([r.gold_index for r in records])
    total = 0.0
    for k in range(n_classes):
        order = np.argsort(probs[:, k], kind="stable")
        conf_sorted = probs[order, k]
        hit_sorted = (golds[order] == k).astype(np.float64)
        for segment in np.array_split(np.arange(n), bins):
            acc_rk = hit_sorted[segment].mean()
            conf_rk = conf_sorted[segment].mean()
            total += abs(acc_rk - conf_rk)
    return float(total / (n_classes * bins))
