"""Metrics and statistics: greedy prediction accuracy, fraction-limited
context curves, classification accuracy, stratified k-fold splitting,
and a one-tailed Mann-Whitney U test with an exact small-sample mode."""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

import numpy as np

from .apm import ApmParams, classify, decode_greedy, encode
from .errors import EmptyDataset, EmptySample, EmptyTruth, InvalidK
from .paths import ActionPath
from .vocab import eoa_id_for

EXACT_ENUMERATION_LIMIT = 12


def token_accuracy(predicted: Sequence[int], truth: Sequence[int]) -> float:
    """Positional match rate against the truth length.

    Positions beyond the shorter sequence count as wrong, so a too-short
    prediction is penalized and a too-long one gains nothing.
    """
    if len(truth) == 0:
        raise EmptyTruth("truth sequence is empty")
    hits = sum(1 for p, t in zip(predicted, truth) if p == t)
    return hits / len(truth)


def _prefix_length(n: int, fraction: float) -> int:
    return min(n, max(1, math.ceil(fraction * n)))


def fraction_curve(
    model: ApmParams,
    dataset: Sequence[ActionPath],
    fractions: Sequence[float],
) -> list[tuple[float, float]]:
    """Mean greedy accuracy when only a fraction of each path is observed.

    For fraction f, the first ceil(f*n) actions (at least one) feed the
    encoder and the remaining actions plus the label's EOA mark are the
    target for greedy decoding. When the prefix already covers the whole
    path only the EOA mark remains, which is exactly the classification
    task, so such points are scored by the classifier and the curve's
    right endpoint coincides with classification accuracy.
    """
    if not dataset:
        raise EmptyDataset("no paths")
    points: list[tuple[float, float]] = []
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"fraction {f} outside (0, 1]")
        total = 0.0
        for path in dataset:
            if path.label is None:
                raise EmptyDataset(f"path {path.session_id!r} lacks a label")
            n = len(path.actions)
            cut = _prefix_length(n, f)
            if cut >= n:
                label, _ = classify(model, path)
                total += 1.0 if label is path.label else 0.0
                continue
            prefix = ActionPath(
                user_id=path.user_id,
                session_id=path.session_id,
                actions=path.actions[:cut],
                label=path.label,
            )
            truth = [a for a, _ in path.actions[cut:]] + [eoa_id_for(path.label)]
            predicted = decode_greedy(model, encode(model, prefix), max_len=len(truth))
            total += token_accuracy(predicted, truth)
        points.append((f, total / len(dataset)))
    return points


def classification_accuracy(model: ApmParams, dataset: Sequence[ActionPath]) -> float:
    """Fraction of labeled paths whose classified label matches."""
    if not dataset:
        raise EmptyDataset("no paths")
    hits = 0
    for path in dataset:
        if path.label is None:
            raise EmptyDataset(f"path {path.session_id!r} lacks a label")
        label, _ = classify(model, path)
        hits += 1 if label is path.label else 0
    return hits / len(dataset)


def kfold_split(dataset: Sequence, k: int, seed: int) -> list[list]:
    """Seeded, class-stratified folds with sizes within one of each other.

    Items are grouped by their ``label`` attribute (items without one
    form their own stratum), each stratum is shuffled, and items are
    dealt round-robin over folds so both the global and per-class sizes
    stay balanced.
    """
    if k < 2 or k > len(dataset):
        raise InvalidK(f"k={k} must satisfy 2 <= k <= {len(dataset)}")
    rng = np.random.default_rng(seed)
    strata: dict[str, list[int]] = {}
    for i, item in enumerate(dataset):
        label = getattr(item, "label", None)
        strata.setdefault(label.value if label is not None else "", []).append(i)
    folds: list[list] = [[] for _ in range(k)]
    cursor = 0
    for key in sorted(strata):
        idx = np.array(strata[key])
        rng.shuffle(idx)
        for i in idx:
            folds[cursor % k].append(dataset[int(i)])
            cursor += 1
    return folds


def _midranks(pooled: Sequence[float]) -> list[float]:
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = mid
        i = j + 1
    return ranks


def _u_statistic(ranks: Sequence[float], x_positions: Sequence[int], n1: int) -> float:
    rank_sum = sum(ranks[i] for i in x_positions)
    return rank_sum - n1 * (n1 + 1) / 2.0


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_one_tailed(
    x: Sequence[float], y: Sequence[float], alternative: str, method: str = "auto"
) -> tuple[float, float]:
    """One-tailed Mann-Whitney U test with midrank tie handling.

    ``alternative="greater"`` tests whether x tends to exceed y,
    ``"less"`` the reverse. With the default ``method="auto"``, pooled
    sizes up to 12 get the exact permutation tail (every assignment of
    the pooled values to the two groups); beyond that a tie-corrected
    normal approximation with continuity correction is used. ``"exact"``
    and ``"normal"`` force one route. Returns (U of x, p-value).
    """
    if len(x) == 0 or len(y) == 0:
        raise EmptySample("both samples must be non-empty")
    if alternative not in ("greater", "less"):
        raise ValueError(f"alternative must be 'greater' or 'less', got {alternative!r}")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    n1, n2 = len(x), len(y)
    pooled = list(x) + list(y)
    ranks = _midranks(pooled)
    u = _u_statistic(ranks, range(n1), n1)

    exact = method == "exact" or (
        method == "auto" and n1 + n2 <= EXACT_ENUMERATION_LIMIT
    )
    if exact:
        hits = 0
        total = 0
        for combo in combinations(range(n1 + n2), n1):
            u_perm = _u_statistic(ranks, combo, n1)
            total += 1
            if alternative == "greater":
                hits += 1 if u_perm >= u else 0
            else:
                hits += 1 if u_perm <= u else 0
        return u, hits / total

    mean = n1 * n2 / 2.0
    n = n1 + n2
    tie_term = 0.0
    counts: dict[float, int] = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    for t in counts.values():
        tie_term += t**3 - t
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return u, 1.0
    sd = math.sqrt(var)
    if alternative == "greater":
        z = (u - mean - 0.5) / sd
        return u, _normal_sf(z)
    z = (u - mean + 0.5) / sd
    return u, 1.0 - _normal_sf(z)


def curve_to_csv(points: Sequence[tuple[float, float]]) -> str:
    lines = ["fraction,accuracy"]
    lines.extend(f"{f!r},{a!r}" for f, a in points)
    return "\n".join(lines) + "\n"
