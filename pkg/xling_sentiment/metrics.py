"""
Evaluation primitives and the Monte Carlo cross-validation splitter.

Degenerate cases (zero denominators, constant gold values) return 0 together
with a flag string instead of NaN, so reports stay machine-readable.
"""

import logging
import math
from collections.abc import Hashable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from xling_sentiment.errors import MetricError

logger = logging.getLogger(__name__)

IndexArray = NDArray[np.int64]


@dataclass(frozen=True)
class Split:
    train: IndexArray
    test: IndexArray


@dataclass(frozen=True)
class SplitPlan:
    run_count: int
    train_fraction: float
    seed: int
    runs: tuple[Split, ...]


def _run_rng(seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, run_index])


def _train_size(n: int, train_fraction: float) -> int:
    return int(math.floor(train_fraction * n + 0.5))


def _validate_plan_args(n: int, run_count: int, train_fraction: float, seed: int) -> None:
    if n < 2:
        raise MetricError(f"need at least 2 items to split, got {n}")
    if run_count < 1:
        raise MetricError(f"run_count must be positive, got {run_count}")
    if not 0.0 < train_fraction < 1.0:
        raise MetricError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if seed < 0:
        raise MetricError(f"seed must be non-negative, got {seed}")


def make_splits(n: int, run_count: int, train_fraction: float, seed: int) -> SplitPlan:
    """
    Independent shuffle splits of ``range(n)``.

    Run ``r`` draws its permutation from ``default_rng([seed, r])``; the first
    ``round(train_fraction * n)`` indices train, the rest test.
    """
    _validate_plan_args(n, run_count, train_fraction, seed)
    n_train = _train_size(n, train_fraction)
    if n_train < 1 or n_train >= n:
        raise MetricError(
            f"train_fraction {train_fraction} on {n} items leaves an empty train or test set"
        )
    runs = []
    for run_index in range(run_count):
        order = _run_rng(seed, run_index).permutation(n)
        runs.append(Split(np.sort(order[:n_train]), np.sort(order[n_train:])))
    return SplitPlan(run_count, train_fraction, seed, tuple(runs))


def make_stratified_splits(
    labels: Sequence[Hashable], run_count: int, train_fraction: float, seed: int
) -> SplitPlan:
    """Like :func:`make_splits`, but every class is split separately and keeps both sides."""
    n = len(labels)
    _validate_plan_args(n, run_count, train_fraction, seed)
    groups: dict[Hashable, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(label, []).append(i)
    for label, members in groups.items():
        n_train = _train_size(len(members), train_fraction)
        if n_train < 1 or n_train >= len(members):
            raise MetricError(
                f"class {label!r} has {len(members)} items; cannot split with {train_fraction}"
            )

    runs = []
    for run_index in range(run_count):
        rng = _run_rng(seed, run_index)
        train: list[int] = []
        test: list[int] = []
        for label in sorted(groups, key=repr):
            members = np.array(groups[label])
            order = members[rng.permutation(len(members))]
            n_train = _train_size(len(members), train_fraction)
            train.extend(order[:n_train].tolist())
            test.extend(order[n_train:].tolist())
        runs.append(Split(np.sort(np.array(train)), np.sort(np.array(test))))
    return SplitPlan(run_count, train_fraction, seed, tuple(runs))


def _check_lengths(predicted: Sequence[Any], gold: Sequence[Any], minimum: int = 1) -> None:
    if len(predicted) != len(gold):
        raise MetricError(f"length mismatch: {len(predicted)} predictions, {len(gold)} gold")
    if len(gold) < minimum:
        raise MetricError(f"need at least {minimum} items, got {len(gold)}")


def precision_at_k(
    predictions: Sequence[Sequence[str]], gold: Sequence[str], k: int
) -> float:
    """Fraction of queries whose gold token is among the first ``k`` candidates."""
    _check_lengths(predictions, gold)
    if k < 1:
        raise MetricError(f"k must be positive, got {k}")
    hits = 0
    for position, (candidates, answer) in enumerate(zip(predictions, gold, strict=True)):
        if len(candidates) < k:
            raise MetricError(
                f"query {position} has {len(candidates)} candidates, fewer than k={k}"
            )
        hits += answer in candidates[:k]
    return hits / len(gold)


@dataclass(frozen=True)
class PRFResult:
    precision: float
    recall: float
    f_measure: float
    flags: tuple[str, ...] = ()


def binary_prf(predicted: Sequence[int], gold: Sequence[int]) -> PRFResult:
    """Precision, recall and F-measure of the +1 class."""
    _check_lengths(predicted, gold)
    pred = np.asarray(predicted)
    true = np.asarray(gold)
    tp = int(np.sum((pred == 1) & (true == 1)))
    fp = int(np.sum((pred == 1) & (true != 1)))
    fn = int(np.sum((pred != 1) & (true == 1)))

    flags: list[str] = []
    if tp + fp:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append("precision_undefined")
    if tp + fn:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append("recall_undefined")
    if precision + recall:
        f_measure = 2 * precision * recall / (precision + recall)
    else:
        f_measure = 0.0
        flags.append("f_measure_undefined")
    return PRFResult(precision, recall, f_measure, tuple(flags))


@dataclass(frozen=True)
class RegressionScores:
    r_squared: float
    mse: float
    flags: tuple[str, ...] = ()


def regression_scores(predicted: Sequence[float], gold: Sequence[float]) -> RegressionScores:
    """``r^2 = 1 - SS_res / SS_tot`` about the gold mean, and the mean squared error."""
    _check_lengths(predicted, gold, minimum=2)
    pred = np.asarray(predicted, dtype=np.float64)
    true = np.asarray(gold, dtype=np.float64)
    residuals = true - pred
    ss_res = float(residuals @ residuals)
    mse = ss_res / true.shape[0]
    centered = true - true.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        return RegressionScores(0.0, mse, ("constant_gold",))
    return RegressionScores(1.0 - ss_res / ss_tot, mse)


def multiclass_accuracy(predicted: Sequence[Hashable], gold: Sequence[Hashable]) -> float:
    _check_lengths(predicted, gold)
    return sum(p == g for p, g in zip(predicted, gold, strict=True)) / len(gold)


def confusion_matrix(
    predicted: Sequence[int], gold: Sequence[int], labels: Sequence[int]
) -> list[list[int]]:
    """``matrix[i][j]`` counts items with gold ``labels[i]`` predicted as ``labels[j]``."""
    _check_lengths(predicted, gold)
    position = {label: i for i, label in enumerate(labels)}
    matrix = [[0] * len(labels) for _ in labels]
    for p, g in zip(predicted, gold, strict=True):
        if p not in position or g not in position:
            raise MetricError(f"label outside {list(labels)}: predicted {p}, gold {g}")
        matrix[position[g]][position[p]] += 1
    return matrix


@dataclass(frozen=True)
class MetricReport:
    """One metric across Monte Carlo runs; ``std`` is the population standard deviation."""

    name: str
    per_run_values: tuple[float, ...]
    mean: float
    std: float
    flags: tuple[str, ...] = field(default=())

    @classmethod
    def from_runs(
        cls, name: str, values: Sequence[float], flags: Sequence[str] = ()
    ) -> "MetricReport":
        if not values:
            raise MetricError(f"metric {name!r} has no runs")
        array = np.asarray(values, dtype=np.float64)
        unique_flags = tuple(sorted(set(flags)))
        for flag in unique_flags:
            logger.warning("Metric %s flagged: %s", name, flag)
        return cls(
            name=name,
            per_run_values=tuple(float(v) for v in array),
            mean=float(np.mean(array)),
            std=float(np.std(array)),
            flags=unique_flags,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "runs": list(self.per_run_values),
            "mean": self.mean,
            "std": self.std,
            "flags": list(self.flags),
        }
