"""libsvm text format: ``label idx:val idx:val ... [# comment]``.

Indices are 1-based on disk and 0-based in memory. Duplicate indices on a
line are summed, out-of-order indices are sorted, explicit zeros dropped.
"""

from __future__ import annotations

import math

from ..errors import ParseError
from .example import SparseExample


def _fmt(x: float) -> str:
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def parse_libsvm_line(line: str, *, record: int | None = None, zero_based: bool = False) -> SparseExample:
    text = line.split("#", 1)[0]
    base = 0 if zero_based else 1

    def fail(message: str, char_pos: int) -> ParseError:
        return ParseError(message, record=record, offset=len(text[:char_pos].encode("utf-8")))

    tokens = text.split()
    if not tokens:
        raise ParseError("empty record", record=record, offset=0)
    try:
        label = float(tokens[0])
    except ValueError:
        raise fail(f"non-numeric label {tokens[0]!r}", text.find(tokens[0])) from None
    if not math.isfinite(label):
        raise fail(f"non-finite label {tokens[0]!r}", text.find(tokens[0]))

    acc: dict[int, float] = {}
    for token in tokens[1:]:
        idx_text, sep, val_text = token.partition(":")
        try:
            if not sep:
                raise ValueError
            idx = int(idx_text)
            val = float(val_text)
        except ValueError:
            # Slow path: locate the offending field for the error message.
            where = _locate(text, tokens, token)
            if not sep:
                raise fail(f"malformed feature {token!r}", where) from None
            try:
                int(idx_text)
            except ValueError:
                raise fail(f"non-numeric index {idx_text!r}", where) from None
            raise fail(f"non-numeric value {val_text!r}", where + len(idx_text) + 1) from None
        if idx < base or not math.isfinite(val):
            where = _locate(text, tokens, token)
            if idx < base:
                raise fail(f"index {idx} below {base}", where)
            raise fail(f"non-finite value {val_text!r}", where + len(idx_text) + 1)
        key = idx - base
        acc[key] = acc.get(key, 0.0) + val
    ids = sorted(i for i, v in acc.items() if v != 0.0)
    return SparseExample(ids, [acc[i] for i in ids], label)


def _locate(text: str, tokens: list[str], target: str) -> int:
    pos = 0
    for tok in tokens:
        pos = text.index(tok, pos)
        if tok is target:
            return pos
        pos += len(tok)
    return text.find(target)


def format_libsvm(example: SparseExample, *, zero_based: bool = False) -> str:
    base = 0 if zero_based else 1
    parts = [_fmt(example.label)]
    parts.extend(
        f"{int(i) + base}:{_fmt(float(v))}" for i, v in zip(example.indices, example.values)
    )
    return " ".join(parts)
