"""Bounded top-k tracker keyed on |weight|.

A capacity-``k`` indexed min-heap. Each entry keeps its current weight and
the weight it had when it was last repositioned (its heap key). With a lazy
threshold ``epsilon > 0`` an update only repositions the entry when the
weight moved by at least ``epsilon`` from its key, so the heap order may be
stale by less than ``epsilon``.

Ordering: smaller |key| sits nearer the root; among equal |key| the larger
feature id does, which makes :meth:`TopKHeap.top` (descending |weight|,
ascending id) and eviction agree on ties.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import TextIO

from .errors import EmptyHeapError, NumericInputError, ParseError


class Offer(str, enum.Enum):
    INSERTED = "inserted"
    UPDATED = "updated"
    REJECTED = "rejected"


class TopKHeap:
    def __init__(self, capacity: int, epsilon: float = 0.0):
        if capacity < 0:
            raise ValueError(f"capacity must be >= 0, got {capacity}")
        if not (epsilon >= 0.0 and math.isfinite(epsilon)):
            raise ValueError(f"lazy threshold must be finite and >= 0, got {epsilon}")
        self.capacity = capacity
        self.epsilon = float(epsilon)
        self._ids: list[int] = []  # heap array of feature ids
        self._pos: dict[int, int] = {}
        self._weight: dict[int, float] = {}
        self._key: dict[int, float] = {}
        self.insertions = 0
        self.evictions = 0
        self.repositions = 0

    # -- ordering helpers ------------------------------------------------------

    def _less(self, a: int, b: int) -> bool:
        ka, kb = abs(self._key[a]), abs(self._key[b])
        if ka != kb:
            return ka < kb
        return a > b

    def _swap(self, i: int, j: int) -> None:
        ids = self._ids
        ids[i], ids[j] = ids[j], ids[i]
        self._pos[ids[i]] = i
        self._pos[ids[j]] = j

    def _sift_up(self, i: int) -> None:
        ids = self._ids
        while i > 0:
            parent = (i - 1) >> 1
            if self._less(ids[i], ids[parent]):
                self._swap(i, parent)
                i = parent
            else:
                break

    def _sift_down(self, i: int) -> None:
        ids = self._ids
        n = len(ids)
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            child = left
            right = left + 1
            if right < n and self._less(ids[right], ids[left]):
                child = right
            if self._less(ids[child], ids[i]):
                self._swap(i, child)
                i = child
            else:
                break

    def _remove_at(self, i: int) -> int:
        ids = self._ids
        last = len(ids) - 1
        if i != last:
            self._swap(i, last)
        fid = ids.pop()
        del self._pos[fid]
        if i < len(ids):
            self._sift_down(i)
            self._sift_up(i)
        return fid

    # -- public API ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, index: int) -> bool:
        return index in self._pos

    def __iter__(self) -> Iterator[int]:
        return iter(list(self._ids))

    @property
    def full(self) -> bool:
        return len(self._ids) >= self.capacity

    def get(self, index: int) -> float | None:
        return self._weight.get(index)

    def heap_key(self, index: int) -> float | None:
        """Weight recorded at the entry's last reposition."""
        return self._key.get(index)

    def peek_min(self) -> tuple[int, float]:
        if not self._ids:
            raise EmptyHeapError("heap is empty")
        fid = self._ids[0]
        return fid, self._weight[fid]

    def min_abs_weight(self) -> float:
        """|weight| a newcomer must beat to enter a full heap (0.0 when not full)."""
        if not self.full or not self._ids:
            return 0.0
        return abs(self._weight[self._ids[0]])

    def offer(self, index: int, weight: float) -> Offer:
        weight = float(weight)
        if not math.isfinite(weight):
            raise NumericInputError(f"heap weight must be finite, got {weight!r}")
        pos = self._pos.get(index)
        if pos is not None:
            self._weight[index] = weight
            if abs(weight - self._key[index]) >= self.epsilon:
                self._key[index] = weight
                self.repositions += 1
                self._sift_up(pos)
                self._sift_down(self._pos[index])
            return Offer.UPDATED
        if self.capacity == 0:
            return Offer.REJECTED
        if len(self._ids) >= self.capacity:
            root = self._ids[0]
            # Ties keep the incumbent.
            if not abs(weight) > abs(self._weight[root]):
                return Offer.REJECTED
            self._remove_at(0)
            del self._weight[root]
            del self._key[root]
            self.evictions += 1
        self._weight[index] = weight
        self._key[index] = weight
        self._ids.append(index)
        self._pos[index] = len(self._ids) - 1
        self._sift_up(len(self._ids) - 1)
        self.insertions += 1
        return Offer.INSERTED

    def offer_many(self, indices: Iterable[int], weights: Iterable[float]) -> None:
        for index, weight in zip(indices, weights):
            self.offer(int(index), float(weight))

    def evict_min(self) -> tuple[int, float]:
        if not self._ids:
            raise EmptyHeapError("cannot evict from an empty heap")
        fid = self._remove_at(0)
        weight = self._weight.pop(fid)
        del self._key[fid]
        self.evictions += 1
        return fid, weight

    def remove(self, index: int) -> float | None:
        pos = self._pos.get(index)
        if pos is None:
            return None
        self._remove_at(pos)
        del self._key[index]
        self.evictions += 1
        return self._weight.pop(index)

    def clear(self) -> None:
        self.evictions += len(self._ids)
        self._ids.clear()
        self._pos.clear()
        self._weight.clear()
        self._key.clear()

    def items(self) -> dict[int, float]:
        """Unordered ``{feature id: current weight}`` view (a copy)."""
        return dict(self._weight)

    def top(self) -> list[tuple[int, float]]:
        return sorted(self._weight.items(), key=lambda kv: (-abs(kv[1]), kv[0]))

    def check_invariants(self) -> None:
        """Full scan of structural invariants; raises AssertionError on violation."""
        ids = self._ids
        assert len(ids) <= self.capacity
        assert len(set(ids)) == len(ids) == len(self._pos) == len(self._weight) == len(self._key)
        for i, fid in enumerate(ids):
            assert self._pos[fid] == i
            for child in (2 * i + 1, 2 * i + 2):
                if child < len(ids):
                    assert not self._less(ids[child], fid)
            if self.epsilon > 0:
                assert abs(self._weight[fid] - self._key[fid]) < self.epsilon
            else:
                assert self._weight[fid] == self._key[fid]
        assert self.insertions - self.evictions == len(ids)


def format_snapshot(entries: Iterable[tuple[int, float]]) -> str:
    return "".join(f"{fid}\t{weight!r}\n" for fid, weight in entries)


def write_snapshot(heap: TopKHeap, fh: TextIO) -> None:
    fh.write(format_snapshot(heap.top()))


def parse_snapshot_line(line: str, record: int | None = None) -> tuple[int, float]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 2:
        raise ParseError("expected 'feature_id<TAB>weight'", record=record, offset=0)
    try:
        fid = int(parts[0])
    except ValueError:
        raise ParseError(f"bad feature id {parts[0]!r}", record=record, offset=0) from None
    try:
        weight = float(parts[1])
    except ValueError:
        raise ParseError(
            f"bad weight {parts[1]!r}", record=record, offset=len(parts[0]) + 1
        ) from None
    return fid, weight


def read_snapshot(path: str | Path) -> list[tuple[int, float]]:
    with open(path, encoding="utf-8") as fh:
        return [
            parse_snapshot_line(line, i) for i, line in enumerate(fh) if line.strip()
        ]
