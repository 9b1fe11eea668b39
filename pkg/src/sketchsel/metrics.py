"""Evaluation metrics: ROC AUC, average precision, accuracy and support recovery.

Labels are binary with ``label > 0`` counting as positive, so both {-1, +1}
and {0, 1} encodings work.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabelsError


class MetricKind(str, enum.Enum):
    AUC = "auc"
    AP = "ap"
    ACCURACY = "acc"


@dataclass(frozen=True)
class EvalReport:
    metric: MetricKind
    value: float
    samples: int
    positives: int | None = None

    def lines(self) -> list[str]:
        out = [f"{self.metric.value}={self.value!r}", f"samples={self.samples}"]
        if self.positives is not None:
            out.append(f"positives={self.positives}")
        return out


def _binary(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    return s, y > 0


def auc_counts(scores, labels) -> tuple[int, int, int]:
    """``(2 * wins + ties, positives, negatives)`` over all positive/negative pairs.

    Uses midranks: a positive's doubled win count is ``2 * rank - 1`` minus
    what it contributes against other positives, all in integers.
    """
    s, pos = _binary(scores, labels)
    n_pos = int(pos.sum())
    n_neg = s.size - n_pos
    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    # Doubled midrank of each tie group: first + last rank (1-based).
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_s)) + 1]
    ends = np.r_[starts[1:], s.size]
    doubled = np.empty(s.size, dtype=np.int64)
    for a, b in zip(starts.tolist(), ends.tolist()):
        doubled[order[a:b]] = a + 1 + b
    rank_sum2 = int(doubled[pos].sum())
    return rank_sum2 - n_pos * (n_pos + 1), n_pos, n_neg


def auc(scores, labels) -> float:
    twice, n_pos, n_neg = auc_counts(scores, labels)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("AUC needs at least one positive and one negative")
    return twice / (2 * n_pos * n_neg)


def average_precision(scores, labels) -> float:
    """Mean over positives of precision at the positive's rank.

    Ranking is by descending score; equal scores keep ascending input index.
    """
    s, pos = _binary(scores, labels)
    n_pos = int(pos.sum())
    if n_pos == 0:
        raise DegenerateLabelsError("average precision needs at least one positive")
    order = np.argsort(-s, kind="stable")
    ranks = np.flatnonzero(pos[order]) + 1
    return math.fsum(hit / r for hit, r in enumerate(ranks.tolist(), start=1)) / n_pos


def accuracy(predicted, truth) -> float:
    a = np.asarray(predicted).reshape(-1)
    b = np.asarray(truth).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"{a.size} predictions but {b.size} true labels")
    if a.size == 0:
        raise ValueError("accuracy of an empty sample is undefined")
    return int(np.count_nonzero(a == b)) / a.size


def support_recovered(estimate: Iterable[int], truth: Iterable[int]) -> bool:
    return set(int(i) for i in truth) <= set(int(i) for i in estimate)


def evaluate(metric: MetricKind | str, scores, labels) -> EvalReport:
    """Compute one metric; for accuracy, ``scores`` are predicted classes."""
    metric = MetricKind(metric)
    labels = np.asarray(labels)
    if metric is MetricKind.ACCURACY:
        return EvalReport(metric, accuracy(scores, labels), int(labels.size))
    fn = auc if metric is MetricKind.AUC else average_precision
    return EvalReport(metric, fn(scores, labels), int(labels.size), int(np.count_nonzero(labels > 0)))
