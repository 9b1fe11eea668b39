"""Top-k sparse linear models: MISSION, SGD IHT and Batch IHT.

All three keep the active coefficients in one :class:`TopKHeap` per class;
prediction reads only heap weights. They differ in what happens to a
gradient component:

* MISSION adds it to a Count-Sketch and offers the sketch's estimate of each
  touched feature to the heap.
* IHT adds it to the heap weight directly; untracked features compete with
  their bare gradient value, so eviction is the hard threshold.
* Batch IHT accumulates into a bounded side buffer and prunes it to the top
  k whenever the buffer fills (and at epoch end).

Within a step, tracked features are refreshed before untracked ones are
offered. With an exact heap this makes the heap the top k (by |weight|) of
the tracked and touched features together.
"""

from __future__ import annotations

import enum
import functools
from collections.abc import Mapping, Sequence

import numpy as np

from ..countsketch import CountSketch, SketchGeometry, merge
from ..data.example import SparseExample
from ..errors import InvalidBudgetError, UnsupportedModeError
from ..topk import TopKHeap
from .loss import LossSpec, SparseStep, example_loss, scores_from, step_from_scores


class Algo(str, enum.Enum):
    MISSION = "mission"
    IHT = "iht"
    BATCH_IHT = "batch-iht"
    FH = "fh"


class DenseTopKModel:
    """Heap-supported linear model over ``classes`` outputs.

    ``geometry`` is the sketch geometry of one class region; MISSION keeps
    ``classes`` disjoint sketches of that geometry.
    """

    def __init__(
        self,
        k: int,
        algo: Algo | str = Algo.MISSION,
        *,
        classes: int = 1,
        geometry: SketchGeometry | None = None,
        seed: int = 0,
        heap_epsilon: float = 0.0,
        buffer_budget: int | None = None,
        record_gradients: bool = False,
    ):
        self.algo = Algo(algo)
        if self.algo is Algo.FH:
            raise UnsupportedModeError("feature hashing uses FeatureHashModel")
        if classes < 1:
            raise ValueError("classes must be >= 1")
        self.k = k
        self.classes = classes
        self.seed = seed
        self.heap_epsilon = heap_epsilon
        self.heaps = [TopKHeap(k, heap_epsilon) for _ in range(classes)]
        self.geometry = geometry
        self.sketches: list[CountSketch] | None = None
        if self.algo is Algo.MISSION:
            if geometry is None:
                raise ValueError("MISSION needs a sketch geometry")
            self.sketches = [CountSketch(geometry, seed) for _ in range(classes)]
        self.buffer_budget = buffer_budget
        self.buffers: list[dict[int, float]] | None = None
        self.flushes = 0
        if self.algo is Algo.BATCH_IHT:
            if buffer_budget is None or buffer_budget < k:
                raise InvalidBudgetError(f"buffer budget {buffer_budget} must be >= k={k}")
            self.buffers = [{} for _ in range(classes)]
        self.steps = 0
        self.gradient_log: list[tuple[int, np.ndarray, np.ndarray]] | None = [] if record_gradients else None

    def __repr__(self) -> str:
        return f"DenseTopKModel(algo={self.algo.value}, k={self.k}, classes={self.classes}, geometry={self.geometry})"

    @property
    def sketch(self) -> CountSketch | None:
        return self.sketches[0] if self.sketches else None

    def weights(self) -> list[dict[int, float]]:
        return [h.items() for h in self.heaps]

    def scores(self, example: SparseExample) -> np.ndarray:
        return scores_from([h._weight for h in self.heaps], example)

    def top(self, c: int = 0) -> list[tuple[int, float]]:
        return self.heaps[c].top()

    def step(self, loss: LossSpec, example: SparseExample) -> float:
        if self.algo is Algo.MISSION:
            return mission_step(self, loss, example)
        if self.algo is Algo.IHT:
            return iht_step(self, loss, example)
        return batch_iht_step(self, loss, [example])

    def batch_step(self, loss: LossSpec, examples: Sequence[SparseExample]) -> float:
        if self.algo is Algo.MISSION:
            return mission_batch_step(self, loss, examples)
        if self.algo is Algo.IHT:
            return iht_batch_step(self, loss, examples)
        return batch_iht_step(self, loss, examples)

    def end_epoch(self) -> None:
        if self.algo is Algo.BATCH_IHT:
            flush_buffer(self)


# -- shared pieces -----------------------------------------------------------------


def _prepare(model: DenseTopKModel, loss: LossSpec, example: SparseExample) -> tuple[SparseStep, float]:
    loss.check_label(example.label, model.classes)
    scores = model.scores(example)
    return step_from_scores(loss, example, scores), example_loss(loss, example, scores)


def _offer_refresh_first(heap: TopKHeap, ids: np.ndarray, weights: np.ndarray) -> None:
    pending = []
    for fid, w in zip(ids.tolist(), weights.tolist()):
        if fid in heap:
            heap.offer(fid, w)
        else:
            pending.append((fid, w))
    for fid, w in pending:
        heap.offer(fid, w)


def _aggregate(steps: list[SparseStep], c: int) -> tuple[np.ndarray, np.ndarray]:
    """Sum per-example steps of class ``c`` into one sparse vector (ascending ids)."""
    ids = np.concatenate([s.indices for s in steps]) if steps else np.zeros(0, np.int64)
    vals = np.concatenate([s.values[c] for s in steps]) if steps else np.zeros(0)
    uniq, inverse = np.unique(ids, return_inverse=True)
    total = np.zeros(uniq.size)
    np.add.at(total, inverse, vals)
    nz = total != 0.0
    return uniq[nz], total[nz]


def _log(model: DenseTopKModel, c: int, ids: np.ndarray, g: np.ndarray) -> None:
    if model.gradient_log is not None:
        model.gradient_log.append((c, ids.copy(), g.copy()))


# -- MISSION -----------------------------------------------------------------------


def _mission_apply(model: DenseTopKModel, c: int, ids: np.ndarray, g: np.ndarray) -> None:
    if ids.size == 0:
        return
    _log(model, c, ids, g)
    estimates = model.sketches[c].update_and_query(ids, g)
    _offer_refresh_first(model.heaps[c], ids, estimates)


def mission_step(model: DenseTopKModel, loss: LossSpec, example: SparseExample) -> float:
    """One MISSION update; returns the example's loss before the step."""
    if model.algo is not Algo.MISSION:
        raise UnsupportedModeError("mission_step needs a MISSION model")
    step, value = _prepare(model, loss, example)
    for c in range(model.classes):
        _mission_apply(model, c, *step.for_class(c))
    model.steps += 1
    return value


def mission_batch_step(model: DenseTopKModel, loss: LossSpec, examples: Sequence[SparseExample]) -> float:
    """Mini-batch MISSION: all gradients taken at the current heap, summed, then sketched."""
    if model.algo is not Algo.MISSION:
        raise UnsupportedModeError("mission_batch_step needs a MISSION model")
    prepared = [_prepare(model, loss, ex) for ex in examples]
    steps = [s for s, _ in prepared]
    for c in range(model.classes):
        _mission_apply(model, c, *_aggregate(steps, c))
    model.steps += 1
    return float(np.mean([v for _, v in prepared])) if prepared else 0.0


def decay_unselected(model: DenseTopKModel, gamma: float) -> None:
    """Scale the sketched mass of every feature outside the heap by ``gamma``.

    Identity sketches scale cells directly. Multi-hash sketches use
    linearity: ``S <- gamma * S + (1 - gamma) * sketch(heap weights)``.
    """
    if model.algo is not Algo.MISSION:
        raise UnsupportedModeError("only MISSION models carry a sketch")
    for heap, sketch in zip(model.heaps, model.sketches):
        if sketch.is_identity:
            sketch.scale_except(gamma, list(heap))
        else:
            items = heap.items()
            sketch.scale(gamma)
            if items:
                ids = np.fromiter(items.keys(), dtype=np.int64, count=len(items))
                vals = np.fromiter(items.values(), dtype=np.float64, count=len(items))
                sketch.update_many(ids, (1.0 - gamma) * vals)


def merge_mission_shards(shards: Sequence[DenseTopKModel]) -> DenseTopKModel:
    """Combine MISSION models trained on disjoint shards.

    Sketches are summed cell-wise; each class heap is rebuilt by querying the
    merged sketch at the union of the shards' heap candidates.
    """
    if not shards:
        raise ValueError("need at least one shard")
    first = shards[0]
    if any(s.algo is not Algo.MISSION for s in shards):
        raise UnsupportedModeError("only MISSION models can be merged")
    out = DenseTopKModel(
        first.k, Algo.MISSION, classes=first.classes, geometry=first.geometry,
        seed=first.seed, heap_epsilon=first.heap_epsilon,
    )
    for c in range(first.classes):
        merged = functools.reduce(merge, [s.sketches[c] for s in shards])
        out.sketches[c] = merged
        ids = np.array(sorted(set().union(*(s.heaps[c]._weight for s in shards))), dtype=np.int64)
        if ids.size:
            _offer_refresh_first(out.heaps[c], ids, merged.query_many(ids))
    out.steps = sum(s.steps for s in shards)
    return out


# -- IHT ---------------------------------------------------------------------------


def _iht_apply(model: DenseTopKModel, c: int, ids: np.ndarray, g: np.ndarray) -> None:
    if ids.size == 0:
        return
    _log(model, c, ids, g)
    heap = model.heaps[c]
    current = heap._weight
    # Untracked features enter at their bare gradient: thresholded weights are exactly 0.
    new = np.array([current.get(fid, 0.0) for fid in ids.tolist()]) + g
    _offer_refresh_first(heap, ids, new)


def iht_step(model: DenseTopKModel, loss: LossSpec, example: SparseExample) -> float:
    if model.algo is not Algo.IHT:
        raise UnsupportedModeError("iht_step needs an IHT model")
    step, value = _prepare(model, loss, example)
    for c in range(model.classes):
        _iht_apply(model, c, *step.for_class(c))
    model.steps += 1
    return value


def iht_batch_step(model: DenseTopKModel, loss: LossSpec, examples: Sequence[SparseExample]) -> float:
    if model.algo is not Algo.IHT:
        raise UnsupportedModeError("iht_batch_step needs an IHT model")
    prepared = [_prepare(model, loss, ex) for ex in examples]
    steps = [s for s, _ in prepared]
    for c in range(model.classes):
        _iht_apply(model, c, *_aggregate(steps, c))
    model.steps += 1
    return float(np.mean([v for _, v in prepared])) if prepared else 0.0


# -- Batch IHT ---------------------------------------------------------------------


def flush_buffer(model: DenseTopKModel) -> None:
    """Sort the buffer by |weight|, keep the top k as the new heap, reseed the buffer."""
    if model.algo is not Algo.BATCH_IHT:
        raise UnsupportedModeError("only Batch IHT models have a buffer")
    for c, heap in enumerate(model.heaps):
        kept = hard_threshold(model.buffers[c], model.k)
        heap.clear()
        for fid, w in sorted(kept.items(), key=lambda kv: (-abs(kv[1]), kv[0])):
            heap.offer(fid, w)
        model.buffers[c] = heap.items()
    model.flushes += 1


def batch_iht_step(model: DenseTopKModel, loss: LossSpec, examples: Sequence[SparseExample]) -> float:
    """Accumulate each example's gradient (taken at the current heap) into the buffer.

    The buffer starts as a copy of the heap, so its size counts the heap's
    own features; reaching ``buffer_budget`` triggers a sort-and-prune.
    """
    if model.algo is not Algo.BATCH_IHT:
        raise UnsupportedModeError("batch_iht_step needs a Batch IHT model")
    losses = []
    for ex in examples:
        step, value = _prepare(model, loss, ex)
        losses.append(value)
        full = False
        for c in range(model.classes):
            ids, g = step.for_class(c)
            _log(model, c, ids, g)
            buf = model.buffers[c]
            for fid, gv in zip(ids.tolist(), g.tolist()):
                buf[fid] = buf.get(fid, 0.0) + gv
            full = full or len(buf) >= model.buffer_budget
        if full:
            flush_buffer(model)
        model.steps += 1
    return float(np.mean(losses)) if losses else 0.0


# -- hard thresholding -----------------------------------------------------------------


def hard_threshold(v, k: int):
    """Keep the k largest-|value| entries (ties by ascending index), zero the rest.

    Accepts a ``{index: value}`` mapping (returns a dict without zeros) or a
    dense array (returns an array of the same shape).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if isinstance(v, Mapping):
        ranked = sorted(((i, x) for i, x in v.items() if x != 0.0), key=lambda kv: (-abs(kv[1]), kv[0]))
        return dict(ranked[:k])
    arr = np.asarray(v, dtype=np.float64)
    out = np.zeros_like(arr)
    if k == 0:
        return out
    order = np.lexsort((np.arange(arr.size), -np.abs(arr)))
    keep = order[:k]
    keep = keep[arr[keep] != 0.0]
    out[keep] = arr[keep]
    return out
