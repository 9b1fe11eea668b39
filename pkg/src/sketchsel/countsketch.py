"""Count-Sketch: a d x w grid of signed float64 counters.

Each row ``j`` owns a bucket hash ``h_j`` and a sign hash ``s_j``. Both come
from a single evaluation of a keyed 64-bit mixer: the low 32 bits of the
mixed value pick the bucket (reduced modulo ``width``) and bit 63 picks the
sign. Rows are keyed by ``(seed, row)`` so a sketch is fully determined by its
geometry and seed.

The identity mode is the degenerate single-row sketch with ``h(i) = i mod w``
and ``s(i) = +1``; with ``width >= p`` it stores the vector exactly.
"""

from __future__ import annotations

import enum
import io
import math
import struct
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    IncompatibleSketchError,
    InvalidGeometryError,
    NumericInputError,
    ParseError,
    UnsupportedModeError,
)

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_LOW32 = np.uint64(0xFFFFFFFF)

MAGIC = b"CSK1"
_HEADER = struct.Struct("<4sQQQQ")


class SketchMode(str, enum.Enum):
    STANDARD = "standard"
    IDENTITY = "identity"


_MODE_CODES = {SketchMode.STANDARD: 0, SketchMode.IDENTITY: 1}


def _mix64_int(x: int) -> int:
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer over a uint64 array (wrapping arithmetic)."""
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def row_key(seed: int, row: int) -> int:
    return _mix64_int(seed + _GOLDEN * (row + 1))


def _as_index_array(indices) -> np.ndarray:
    arr = np.asarray(indices)
    if arr.dtype.kind not in "iu":
        raise NumericInputError(f"feature ids must be integers, got dtype {arr.dtype}")
    if arr.dtype.kind == "i" and arr.size and arr.min() < 0:
        raise NumericInputError("feature ids must be non-negative")
    return arr.astype(np.uint64, copy=False).reshape(-1)


@dataclass(frozen=True)
class SketchGeometry:
    depth: int
    width: int
    mode: SketchMode = SketchMode.STANDARD

    def __post_init__(self):
        object.__setattr__(self, "mode", SketchMode(self.mode))
        if self.depth < 1 or self.width < 1:
            raise InvalidGeometryError(
                f"sketch depth and width must be >= 1, got depth={self.depth} width={self.width}"
            )
        if self.mode is SketchMode.IDENTITY and self.depth != 1:
            raise InvalidGeometryError("identity sketches have exactly one row")

    @classmethod
    def identity(cls, p: int) -> "SketchGeometry":
        return cls(depth=1, width=p, mode=SketchMode.IDENTITY)

    @property
    def cells(self) -> int:
        return self.depth * self.width


def width_for_budget(total_counters: int, depth: int, classes: int = 1) -> int:
    """Per-class row width when ``total_counters`` are split over ``depth`` rows and ``classes``."""
    width = total_counters // (depth * classes)
    if width < 1:
        raise InvalidGeometryError(
            f"budget of {total_counters} counters cannot hold {classes} class(es) x {depth} rows"
        )
    return width


class CountSketch:
    """Signed counter grid supporting update, median query, merge and scaling.

    Not thread-safe: one writer at a time. Shards should each own a sketch
    and combine them with :func:`merge`.
    """

    def __init__(self, geometry: SketchGeometry, seed: int = 0):
        if not 0 <= seed <= MASK64:
            raise NumericInputError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.geometry = geometry
        self.seed = int(seed)
        self.counters = np.zeros((geometry.depth, geometry.width), dtype=np.float64)
        self._keys = np.array(
            [row_key(self.seed, j) for j in range(geometry.depth)], dtype=np.uint64
        )

    @property
    def depth(self) -> int:
        return self.geometry.depth

    @property
    def width(self) -> int:
        return self.geometry.width

    @property
    def mode(self) -> SketchMode:
        return self.geometry.mode

    @property
    def is_identity(self) -> bool:
        return self.geometry.mode is SketchMode.IDENTITY

    def __repr__(self) -> str:
        return (
            f"CountSketch(depth={self.depth}, width={self.width}, "
            f"mode={self.mode.value}, seed={self.seed})"
        )

    # -- hashing -----------------------------------------------------------

    def locate(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """Bucket and sign of each index in every row: two ``(depth, m)`` arrays."""
        idx = _as_index_array(indices)
        width = np.uint64(self.width)
        if self.is_identity:
            buckets = (idx % width).astype(np.int64)[None, :]
            return buckets, np.ones_like(buckets, dtype=np.float64)
        mixed = mix64(idx[None, :] ^ self._keys[:, None])
        buckets = ((mixed & _LOW32) % width).astype(np.int64)
        signs = np.where((mixed >> np.uint64(63)) == 1, -1.0, 1.0)
        return buckets, signs

    # -- updates and queries -------------------------------------------------

    def update(self, index: int, delta: float) -> None:
        if not math.isfinite(delta):
            raise NumericInputError(f"update delta must be finite, got {delta!r}")
        buckets, signs = self.locate([index])
        for j in range(self.depth):
            self.counters[j, buckets[j, 0]] += signs[j, 0] * delta

    def update_many(self, indices, deltas) -> None:
        """Apply ``update(indices[t], deltas[t])`` for every ``t`` in order."""
        deltas = np.asarray(deltas, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(deltas)):
            raise NumericInputError("update deltas must be finite")
        buckets, signs = self.locate(indices)
        if buckets.shape[1] != deltas.shape[0]:
            raise NumericInputError("indices and deltas differ in length")
        for j in range(self.depth):
            # add.at is unbuffered and sequential, so repeated buckets
            # accumulate in the same order as individual update calls.
            np.add.at(self.counters[j], buckets[j], signs[j] * deltas)

    def update_and_query(self, indices, deltas) -> np.ndarray:
        """``update_many`` followed by ``query_many`` on the same ids, hashing once."""
        deltas = np.asarray(deltas, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(deltas)):
            raise NumericInputError("update deltas must be finite")
        buckets, signs = self.locate(indices)
        for j in range(self.depth):
            np.add.at(self.counters[j], buckets[j], signs[j] * deltas)
        if self.depth == 1:
            return signs[0] * self.counters[0, buckets[0]]
        rows = np.arange(self.depth)[:, None]
        return np.median(signs * self.counters[rows, buckets], axis=0)

    def query(self, index: int) -> float:
        return float(self.query_many([index])[0])

    def query_many(self, indices) -> np.ndarray:
        buckets, signs = self.locate(indices)
        if self.depth == 1:
            return signs[0] * self.counters[0, buckets[0]]
        rows = np.arange(self.depth)[:, None]
        return np.median(signs * self.counters[rows, buckets], axis=0)

    # -- linear operations ---------------------------------------------------

    def compatible_with(self, other: "CountSketch") -> bool:
        return self.geometry == other.geometry and self.seed == other.seed

    def merge(self, other: "CountSketch") -> "CountSketch":
        return merge(self, other)

    def scale(self, factor: float) -> None:
        if not math.isfinite(factor):
            raise NumericInputError(f"scale factor must be finite, got {factor!r}")
        self.counters *= factor

    def scale_except(self, factor: float, protected: Iterable[int]) -> None:
        """Multiply every cell by ``factor`` except the cells of ``protected`` features.

        Only defined for identity sketches, where cells and features are in
        bijection; a multi-hash sketch cannot protect a single feature.
        """
        if not self.is_identity:
            raise UnsupportedModeError(
                "scale_except needs an identity sketch; colliding buckets make "
                "per-feature protection ill-defined"
            )
        if not math.isfinite(factor):
            raise NumericInputError(f"scale factor must be finite, got {factor!r}")
        protected = np.fromiter(protected, dtype=np.int64)
        cells = self.locate(protected)[0][0] if protected.size else protected
        keep = self.counters[0, cells].copy()
        self.counters *= factor
        self.counters[0, cells] = keep

    def copy(self) -> "CountSketch":
        out = CountSketch(self.geometry, self.seed)
        out.counters[...] = self.counters
        return out

    def clear(self) -> None:
        self.counters[...] = 0.0

    def equals(self, other: "CountSketch") -> bool:
        """Same geometry, seed and bit-identical counters."""
        return self.compatible_with(other) and np.array_equal(self.counters, other.counters)

    # -- serialization ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            MAGIC, self.depth, self.width, _MODE_CODES[self.mode], self.seed
        )
        return header + self.counters.astype("<f8", copy=False).tobytes(order="C")

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CountSketch":
        if len(blob) < _HEADER.size:
            raise ParseError("truncated sketch header", offset=len(blob))
        magic, depth, width, mode_code, seed = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise ParseError(f"bad sketch magic {magic!r}", offset=0)
        modes = {code: mode for mode, code in _MODE_CODES.items()}
        if mode_code not in modes:
            raise ParseError(f"unknown sketch mode code {mode_code}", offset=24)
        sketch = cls(SketchGeometry(depth, width, modes[mode_code]), seed)
        expected = _HEADER.size + 8 * depth * width
        if len(blob) != expected:
            raise ParseError(
                f"sketch body has {len(blob) - _HEADER.size} bytes, expected {expected - _HEADER.size}",
                offset=_HEADER.size,
            )
        body = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
        sketch.counters[...] = body.reshape(depth, width)
        return sketch

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "CountSketch":
        return cls.from_bytes(Path(path).read_bytes())

    def write(self, fh: io.BufferedIOBase) -> None:
        fh.write(self.to_bytes())


def new_sketch(geometry: SketchGeometry, seed: int = 0) -> CountSketch:
    return CountSketch(geometry, seed)


def merge(a: CountSketch, b: CountSketch) -> CountSketch:
    """Cell-wise sum of two sketches built with the same geometry and seed."""
    if not a.compatible_with(b):
        raise IncompatibleSketchError(
            f"cannot merge {a!r} with {b!r}: geometry and seed must match"
        )
    out = a.copy()
    out.counters += b.counters
    return out
