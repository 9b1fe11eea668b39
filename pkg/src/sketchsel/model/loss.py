"""Losses and their learning-rate scaled descent steps.

Every supported loss has a gradient of the form ``dL/dbeta = -m * x`` for
a scalar (or per-class) multiplier ``m`` of the score, so a step over a
sparse example is ``lr * m * x`` restricted to the example's support.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..data.example import SparseExample
from ..errors import LabelDomainError


class LossKind(str, enum.Enum):
    SQUARED = "squared"
    LOGISTIC = "logistic"
    HINGE = "hinge"
    CROSS_ENTROPY = "xent"

    @classmethod
    def parse(cls, name: str) -> "LossKind":
        aliases = {"cross-entropy": "xent", "cross_entropy": "xent", "crossentropy": "xent"}
        return cls(aliases.get(name, name))


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    lr: float

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind.parse(self.kind) if isinstance(self.kind, str) else self.kind)
        if not (self.lr > 0 and math.isfinite(self.lr)):
            raise ValueError(f"learning rate must be positive and finite, got {self.lr}")

    @property
    def multiclass(self) -> bool:
        return self.kind is LossKind.CROSS_ENTROPY

    def check_classes(self, classes: int) -> None:
        if self.multiclass and classes < 2:
            raise LabelDomainError("cross-entropy needs at least 2 classes")
        if not self.multiclass and classes != 1:
            raise LabelDomainError(f"{self.kind.value} loss is single-output; got {classes} classes")

    def check_label(self, label: float, classes: int = 1) -> None:
        if self.kind in (LossKind.LOGISTIC, LossKind.HINGE):
            if label not in (-1.0, 1.0):
                raise LabelDomainError(f"{self.kind.value} loss needs labels in {{-1, +1}}, got {label:g}")
        elif self.kind is LossKind.CROSS_ENTROPY:
            if not (float(label).is_integer() and 0 <= label < classes):
                raise LabelDomainError(f"class label {label:g} outside [0, {classes})")
        elif not math.isfinite(label):
            raise LabelDomainError("regression label must be finite")

    # -- scalar machinery ---------------------------------------------------------

    def multiplier(self, label: float, score):
        """Score-space step ``lr * m`` such that the weight step is ``lr * m * x``."""
        kind = self.kind
        if kind is LossKind.SQUARED:
            return 2.0 * self.lr * (label - score)
        if kind is LossKind.LOGISTIC:
            return self.lr * label * _sigmoid(-label * score)
        if kind is LossKind.HINGE:
            return self.lr * label if label * score < 1.0 else 0.0
        probs = softmax(np.asarray(score, dtype=np.float64))
        target = np.zeros_like(probs)
        target[int(label)] = 1.0
        return self.lr * (target - probs)

    def value(self, label: float, score) -> float:
        kind = self.kind
        if kind is LossKind.SQUARED:
            return (label - score) ** 2
        if kind is LossKind.LOGISTIC:
            return float(np.logaddexp(0.0, -label * score))
        if kind is LossKind.HINGE:
            return max(0.0, 1.0 - label * score)
        s = np.asarray(score, dtype=np.float64)
        return float(_logsumexp(s) - s[int(label)])


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _logsumexp(s: np.ndarray) -> float:
    top = float(np.max(s))
    return top + math.log(float(np.sum(np.exp(s - top))))


def softmax(s: np.ndarray) -> np.ndarray:
    e = np.exp(s - np.max(s))
    return e / e.sum()


@dataclass
class SparseStep:
    """A sparse descent step: ``values[c, t]`` applies to ``indices[t]`` of class ``c``."""

    indices: np.ndarray
    values: np.ndarray

    def for_class(self, c: int = 0) -> tuple[np.ndarray, np.ndarray]:
        vals = self.values[c]
        nz = vals != 0.0
        return self.indices[nz], vals[nz]


def scores_from(weights: list[dict[int, float]], example: SparseExample) -> np.ndarray:
    """Per-class inner products of ``example`` with ``{feature: weight}`` maps."""
    ids = example.indices.tolist()
    vals = example.values.tolist()
    out = np.empty(len(weights))
    for c, w in enumerate(weights):
        total = 0.0
        for i, v in zip(ids, vals):
            wi = w.get(i)
            if wi is not None:
                total += wi * v
        out[c] = total
    return out


def gradient(loss: LossSpec, example: SparseExample, weights: list[dict[int, float]] | dict[int, float]) -> SparseStep:
    """Descent step ``-lr * dL/dbeta`` at the given active weights.

    ``weights`` is one ``{feature: weight}`` map per class (a bare map for a
    single output). The result's support is contained in the example's.
    """
    if isinstance(weights, dict):
        weights = [weights]
    classes = len(weights)
    loss.check_label(example.label, classes)
    scores = scores_from(weights, example)
    return step_from_scores(loss, example, scores)


def step_from_scores(loss: LossSpec, example: SparseExample, scores: np.ndarray) -> SparseStep:
    if loss.multiclass:
        m = loss.multiplier(example.label, scores)
        values = np.outer(m, example.values)
    else:
        m = loss.multiplier(example.label, float(scores[0]))
        values = (m * example.values)[None, :]
    return SparseStep(example.indices, values)


def example_loss(loss: LossSpec, example: SparseExample, scores: np.ndarray) -> float:
    if loss.multiclass:
        return loss.value(example.label, scores)
    return loss.value(example.label, float(scores[0]))
