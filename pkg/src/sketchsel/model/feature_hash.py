"""Dense feature-hashing baseline.

Feature ids are re-hashed into ``width`` buckets without a sign, so colliding
features share one weight. Not a feature selector: bucket identity is lost.
"""

from __future__ import annotations

import numpy as np

from ..countsketch import _LOW32, _as_index_array, mix64, row_key
from ..data.example import SparseExample
from .loss import LossSpec, example_loss, step_from_scores


def fh_width_for(p: int) -> int:
    """Smallest power of two strictly greater than ``p``."""
    return 1 << int(p).bit_length()


class FeatureHashModel:
    def __init__(self, width: int, classes: int = 1, seed: int = 0):
        if width < 1:
            raise ValueError(f"width must be >= 1, got {width}")
        self.width = width
        self.classes = classes
        self.seed = seed
        self.weights = np.zeros((classes, width))
        self._key = np.uint64(row_key(seed, 0))
        self.steps = 0

    def __repr__(self) -> str:
        return f"FeatureHashModel(width={self.width}, classes={self.classes}, seed={self.seed})"

    def buckets(self, indices) -> np.ndarray:
        idx = _as_index_array(indices)
        return ((mix64(idx ^ self._key) & _LOW32) % np.uint64(self.width)).astype(np.int64)

    def scores(self, example: SparseExample) -> np.ndarray:
        b = self.buckets(example.indices)
        return self.weights[:, b] @ example.values

    def step(self, loss: LossSpec, example: SparseExample) -> float:
        return fh_step(self, loss, example)

    def batch_step(self, loss: LossSpec, examples) -> float:
        return float(np.mean([fh_step(self, loss, ex) for ex in examples])) if examples else 0.0

    def end_epoch(self) -> None:
        pass

    def nonzero(self, c: int = 0) -> list[tuple[int, float]]:
        nz = np.flatnonzero(self.weights[c])
        order = sorted(nz.tolist(), key=lambda b: (-abs(self.weights[c, b]), b))
        return [(b, float(self.weights[c, b])) for b in order]


def fh_step(model: FeatureHashModel, loss: LossSpec, example: SparseExample) -> float:
    loss.check_label(example.label, model.classes)
    b = model.buckets(example.indices)
    scores = model.weights[:, b] @ example.values
    value = example_loss(loss, example, scores)
    step = step_from_scores(loss, example, scores)
    for c in range(model.classes):
        np.add.at(model.weights[c], b, step.values[c])
    model.steps += 1
    return value
