from .example import SparseExample
from .libsvm import format_libsvm, parse_libsvm_line
from .stream import FileSource, as_source, iter_epoch, read_examples, stream
from .synthetic import (
    Design,
    MulticlassDesign,
    SyntheticDesign,
    TokenStreamDesign,
    generate_design,
    synthetic_multiclass,
    synthetic_token_stream,
)
from .tokens import TokenHasher, format_token_line, hash_token, parse_token_line

__all__ = [
    "Design",
    "FileSource",
    "MulticlassDesign",
    "SparseExample",
    "SyntheticDesign",
    "TokenHasher",
    "TokenStreamDesign",
    "as_source",
    "format_libsvm",
    "format_token_line",
    "generate_design",
    "hash_token",
    "iter_epoch",
    "parse_libsvm_line",
    "parse_token_line",
    "read_examples",
    "stream",
    "synthetic_multiclass",
    "synthetic_token_stream",
]
