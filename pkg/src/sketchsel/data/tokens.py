"""Hashed string features and the ``label<TAB>tok1 tok2 ...`` token format."""

from __future__ import annotations

import hashlib
import math

from ..errors import InvalidSpecError, ParseError
from .example import SparseExample


def hash_token(token: bytes | str, bits: int, seed: int = 0) -> int:
    """Seeded 64-bit keyed BLAKE2b digest of ``token`` truncated to ``bits`` bits."""
    if not 1 <= bits <= 63:
        raise InvalidSpecError(f"hash space bits must be in [1, 63], got {bits}")
    if isinstance(token, str):
        token = token.encode("utf-8")
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(token, digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little") & ((1 << bits) - 1)


class TokenHasher:
    """Maps tokens into ``[0, 2**bits)``; optionally remembers id -> token for reporting."""

    def __init__(self, bits: int, seed: int = 0, keep_names: bool = False):
        hash_token(b"", bits, seed)  # validates bits
        self.bits = bits
        self.seed = seed
        self.names: dict[int, str] | None = {} if keep_names else None

    def __call__(self, token: str) -> int:
        fid = hash_token(token, self.bits, self.seed)
        if self.names is not None:
            self.names.setdefault(fid, token)
        return fid

    def example(self, tokens: list[str], label: float) -> SparseExample:
        counts: dict[int, float] = {}
        for tok in tokens:
            fid = self(tok)
            counts[fid] = counts.get(fid, 0.0) + 1.0
        ids = sorted(counts)
        return SparseExample(ids, [counts[i] for i in ids], label, validate=False)


def parse_token_line(line: str, hasher: TokenHasher, *, record: int | None = None) -> SparseExample:
    text = line.rstrip("\r\n")
    label_text, sep, rest = text.partition("\t")
    if not sep:
        raise ParseError("expected 'label<TAB>tokens'", record=record, offset=len(text.encode()))
    try:
        label = float(label_text)
    except ValueError:
        raise ParseError(f"non-numeric label {label_text!r}", record=record, offset=0) from None
    if not math.isfinite(label):
        raise ParseError(f"non-finite label {label_text!r}", record=record, offset=0)
    return hasher.example(rest.split(), label)


def format_token_line(label: float, tokens: list[str]) -> str:
    lab = str(int(label)) if float(label).is_integer() else repr(float(label))
    return f"{lab}\t{' '.join(tokens)}"
