"""Epoch-wise example streams over files, in-memory sequences or generator factories."""

from __future__ import annotations

import gzip
import logging
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import StreamError
from .example import SparseExample
from .libsvm import parse_libsvm_line
from .tokens import TokenHasher, parse_token_line

log = logging.getLogger(__name__)

FORMATS = ("libsvm", "tokens")


def _is_gzip(path: Path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(2) == b"\x1f\x8b"


@dataclass
class FileSource:
    """A libsvm or token-format file, plain or gzip-compressed.

    Token files need ``hash_bits``; integer-indexed and token datasets are
    never mixed.
    """

    path: Path
    format: str = "libsvm"
    hash_bits: int = 20
    hash_seed: int = 0
    zero_based: bool = False
    keep_token_names: bool = False
    _hasher: TokenHasher | None = field(default=None, init=False, repr=False)
    _offsets: list[int] | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.path = Path(self.path)
        if self.format not in FORMATS:
            raise ValueError(f"unknown data format {self.format!r}; expected one of {FORMATS}")
        if self.format == "tokens":
            self._hasher = TokenHasher(self.hash_bits, self.hash_seed, self.keep_token_names)

    @property
    def token_names(self) -> dict[int, str] | None:
        return self._hasher.names if self._hasher else None

    @property
    def compressed(self) -> bool:
        return _is_gzip(self.path)

    def _parse(self, line: str, record: int) -> SparseExample:
        if self.format == "tokens":
            return parse_token_line(line, self._hasher, record=record)
        return parse_libsvm_line(line, record=record, zero_based=self.zero_based)

    def _open(self):
        try:
            if self.compressed:
                return gzip.open(self.path, "rt", encoding="utf-8")
            return open(self.path, encoding="utf-8")
        except OSError as exc:
            raise StreamError(f"cannot open {self.path}: {exc}") from exc

    def __iter__(self) -> Iterator[SparseExample]:
        record = 0
        with self._open() as fh:
            try:
                for line in fh:
                    if line.strip() and not line.lstrip().startswith("#"):
                        yield self._parse(line, record)
                    record += 1
            except (OSError, EOFError, UnicodeDecodeError) as exc:
                raise StreamError(f"read error in {self.path}: {exc}", record=record) from exc

    def offsets(self) -> list[int]:
        """Byte offset of every data record; the permutation index for shuffling."""
        if self._offsets is None:
            offsets = []
            with open(self.path, "rb") as fh:
                pos = 0
                for raw in fh:
                    stripped = raw.strip()
                    if stripped and not stripped.startswith(b"#"):
                        offsets.append(pos)
                    pos += len(raw)
            self._offsets = offsets
        return self._offsets

    def read_at(self, order: Iterable[int]) -> Iterator[SparseExample]:
        offsets = self.offsets()
        with open(self.path, "rb") as fh:
            for rec in order:
                fh.seek(offsets[rec])
                line = fh.readline().decode("utf-8")
                yield self._parse(line, int(rec))


Source = FileSource | Sequence[SparseExample] | Callable[[], Iterable[SparseExample]]


def _epoch_order(n: int, shuffle_seed: int, epoch: int) -> np.ndarray:
    # Generator.permutation is a Fisher-Yates shuffle.
    return np.random.default_rng([shuffle_seed, epoch]).permutation(n)


def iter_epoch(source: Source, epoch: int = 0, shuffle_seed: int | None = None) -> Iterator[SparseExample]:
    """Examples of a single epoch, shuffled when a seed is given and the source allows it."""
    if isinstance(source, FileSource):
        if shuffle_seed is None:
            yield from source
        elif source.compressed:
            log.warning("%s is compressed; reading sequentially without shuffling", source.path)
            yield from source
        else:
            yield from source.read_at(_epoch_order(len(source.offsets()), shuffle_seed, epoch))
    elif callable(source):
        if shuffle_seed is not None:
            log.warning("generator sources are not shuffled")
        yield from source()
    else:
        if shuffle_seed is None:
            yield from source
        else:
            for i in _epoch_order(len(source), shuffle_seed, epoch):
                yield source[int(i)]


def stream(source: Source, epochs: int = 1, shuffle_seed: int | None = None) -> Iterator[SparseExample]:
    """Every example once per epoch, for ``epochs`` epochs."""
    for epoch in range(epochs):
        yield from iter_epoch(source, epoch, shuffle_seed)


def read_examples(source: Source) -> list[SparseExample]:
    return list(iter_epoch(source))


def as_source(path: str | Path, format: str = "libsvm", **kwargs) -> FileSource:
    return FileSource(Path(path), format, **kwargs)
