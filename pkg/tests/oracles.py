"""Independent brute-force oracles for the calibration math.

Everything here is deliberately written with plain-Python loops and floats,
not numpy, and never calls into the library's metric implementations. Bin
membership for the equal-width binning is decided by counting boundary
comparisons of conf*bins, which pins the same float semantics the library
documents (last bin right-closed) through a different code path.
"""

from __future__ import annotations

import math
from typing import Sequence


def oracle_accuracy(corrects: Sequence[bool]) -> float:
    hits = 0
    for c in corrects:
        if c:
            hits += 1
    return hits / len(corrects)


def oracle_ece(confidences: Sequence[float], corrects: Sequence[bool], bins: int) -> float:
    n = len(confidences)
    assert n > 0 and bins >= 1
    members: list[list[int]] = [[] for _ in range(bins)]
    for i, conf in enumerate(confidences):
        x = conf * bins
        index = 0
        while index < bins - 1 and x >= index + 1:
            index += 1
        members[index].append(i)
    total = 0.0
    for bucket in members:
        if not bucket:
            continue
        acc = sum(1.0 for i in bucket if corrects[i]) / len(bucket)
        conf = sum(confidences[i] for i in bucket) / len(bucket)
        total += (len(bucket) / n) * abs(acc - conf)
    return total


def _equal_mass_slices(n: int, bins: int) -> list[tuple[int, int]]:
    # Contiguous groups, sizes differing by at most one, larger groups first.
    base, extra = divmod(n, bins)
    slices = []
    start = 0
    for r in range(bins):
        size = base + (1 if r < extra else 0)
        slices.append((start, start + size))
        start += size
    assert start == n
    return slices


def oracle_ace(probs: Sequence[Sequence[float]], golds: Sequence[int], bins: int) -> float:
    n = len(probs)
    assert n > 0 and 1 <= bins <= n
    n_classes = len(probs[0])
    total = 0.0
    for k in range(n_classes):
        order = sorted(range(n), key=lambda i: probs[i][k])  # stable on ties
        for start, end in _equal_mass_slices(n, bins):
            chunk = order[start:end]
            if not chunk:
                continue
            acc = sum(1.0 for i in chunk if golds[i] == k) / len(chunk)
            conf = sum(probs[i][k] for i in chunk) / len(chunk)
            total += abs(acc - conf)
    return total / (n_classes * bins)


def oracle_mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n  # population variance
    return mean, math.sqrt(var)
