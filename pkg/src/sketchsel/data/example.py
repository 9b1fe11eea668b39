from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from ..errors import NumericInputError


class SparseExample:
    """One observation: strictly ascending feature ids, nonzero finite values, a label."""

    __slots__ = ("indices", "values", "label")

    def __init__(self, indices, values, label: float, *, validate: bool = True):
        self.indices = np.asarray(indices, dtype=np.int64).reshape(-1)
        self.values = np.asarray(values, dtype=np.float64).reshape(-1)
        self.label = float(label)
        if validate:
            self._validate()

    def _validate(self) -> None:
        if self.indices.shape != self.values.shape:
            raise NumericInputError(
                f"{self.indices.size} indices but {self.values.size} values"
            )
        if self.indices.size and self.indices[0] < 0:
            raise NumericInputError("feature ids must be non-negative")
        if self.indices.size > 1 and not np.all(np.diff(self.indices) > 0):
            raise NumericInputError("feature ids must be strictly ascending")
        if not np.all(np.isfinite(self.values)) or np.any(self.values == 0.0):
            raise NumericInputError("feature values must be finite and nonzero")
        if not np.isfinite(self.label):
            raise NumericInputError("label must be finite")

    @classmethod
    def from_pairs(cls, pairs: Mapping[int, float] | list[tuple[int, float]], label: float) -> "SparseExample":
        """Build from unordered (id, value) pairs: duplicates summed, zeros dropped."""
        acc: dict[int, float] = {}
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        for fid, val in items:
            acc[int(fid)] = acc.get(int(fid), 0.0) + float(val)
        ids = sorted(f for f, v in acc.items() if v != 0.0)
        return cls(ids, [acc[f] for f in ids], label)

    @classmethod
    def from_dense(cls, row, label: float) -> "SparseExample":
        row = np.asarray(row, dtype=np.float64)
        nz = np.flatnonzero(row)
        return cls(nz, row[nz], label, validate=False)

    def __len__(self) -> int:
        return int(self.indices.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseExample):
            return NotImplemented
        return (
            self.label == other.label
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        pairs = ", ".join(f"{i}:{v:g}" for i, v in zip(self.indices[:6], self.values[:6]))
        more = ", ..." if len(self) > 6 else ""
        return f"SparseExample(label={self.label:g}, {{{pairs}{more}}})"

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))
