"""Synthetic data: Gaussian recovery designs, planted token streams, k-mer-like classes."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidSpecError
from .example import SparseExample
from .tokens import TokenHasher

MAX_DESIGN_CELLS = 10**8

Seed = int | Sequence[int]


@dataclass(frozen=True)
class SyntheticDesign:
    """Gaussian design ``y = X beta* + w`` with a k-sparse planted ``beta*``.

    ``attenuation`` divides the k support columns of ``X``; ``variance``
    selects unit-variance entries or the ``N(0, 1/n)`` convention.
    """

    p: int
    n: int
    k: int
    noise: float = 0.0
    attenuation: float = 1.0
    seed: Seed = 0
    variance: str = "unit"
    beta: str = "binary"

    def validate(self) -> None:
        if self.p < 1 or self.n < 1:
            raise InvalidSpecError(f"need p >= 1 and n >= 1, got p={self.p} n={self.n}")
        if not 0 <= self.k <= min(self.n, self.p):
            raise InvalidSpecError(f"sparsity k={self.k} must lie in [0, min(n, p)]")
        if self.noise < 0:
            raise InvalidSpecError("noise level must be >= 0")
        if not self.attenuation >= 1.0:
            raise InvalidSpecError("attenuation must be >= 1")
        if self.n * self.p > MAX_DESIGN_CELLS:
            raise InvalidSpecError(f"n*p={self.n * self.p} exceeds desk-scale limit {MAX_DESIGN_CELLS}")
        if self.variance not in ("unit", "inverse_n"):
            raise InvalidSpecError(f"unknown variance convention {self.variance!r}")
        if self.beta not in ("binary", "gaussian"):
            raise InvalidSpecError(f"unknown coefficient kind {self.beta!r}")


@dataclass
class Design:
    X: np.ndarray
    beta: np.ndarray
    y: np.ndarray
    support: np.ndarray

    def examples(self) -> list[SparseExample]:
        return [SparseExample.from_dense(row, label) for row, label in zip(self.X, self.y)]


def generate_design(design: SyntheticDesign) -> Design:
    design.validate()
    rng = np.random.default_rng(design.seed)
    # Draw order is fixed so that only the attenuation differs between
    # designs that share a seed.
    X = rng.standard_normal((design.n, design.p))
    if design.variance == "inverse_n":
        X /= np.sqrt(design.n)
    support = np.sort(rng.choice(design.p, size=design.k, replace=False))
    coef = rng.standard_normal(design.k)
    if design.beta == "binary":
        coef = np.ones(design.k)
    noise = rng.standard_normal(design.n) * design.noise
    beta = np.zeros(design.p)
    beta[support] = coef
    if design.attenuation != 1.0:
        X[:, support] /= design.attenuation
    y = X @ beta + noise
    return Design(X=X, beta=beta, y=y, support=support)


@dataclass(frozen=True)
class TokenStreamDesign:
    """Binary-labelled token stream with a planted set of informative tokens.

    Every example carries ``informative_per_example`` draws from the planted
    tokens and ``noise_per_example`` draws from a large noise vocabulary.
    Labels are Bernoulli on the logistic of the summed planted weights.
    """

    n: int = 50_000
    bits: int = 20
    informative: int = 100
    vocabulary: int = 200_000
    informative_per_example: int = 8
    noise_per_example: int = 24
    signal: float = 1.5
    seed: int = 0


@dataclass
class TokenStream:
    examples: list[SparseExample]
    planted_ids: np.ndarray
    planted_weights: dict[int, float]
    names: dict[int, str]


def synthetic_token_stream(design: TokenStreamDesign) -> TokenStream:
    rng = np.random.default_rng(design.seed)
    hasher = TokenHasher(design.bits, seed=design.seed, keep_names=True)
    informative = [f"sig{t:04d}" for t in range(design.informative)]
    weights = rng.choice([-1.0, 1.0], size=design.informative) * design.signal
    planted_ids = np.array([hasher(tok) for tok in informative], dtype=np.int64)
    planted = dict(zip(planted_ids.tolist(), weights.tolist()))

    sig_draw = rng.integers(0, design.informative, size=(design.n, design.informative_per_example))
    noise_draw = rng.integers(0, design.vocabulary, size=(design.n, design.noise_per_example))
    coins = rng.random(design.n)
    scores = weights[sig_draw].sum(axis=1)
    labels = np.where(coins < 1.0 / (1.0 + np.exp(-scores)), 1.0, -1.0)

    # Hash each distinct token once, then assemble examples in id space.
    used = np.unique(noise_draw)
    noise_ids = np.zeros(design.vocabulary, dtype=np.int64)
    noise_ids[used] = [hasher(f"w{v}") for v in used.tolist()]
    feats = np.concatenate([planted_ids[sig_draw], noise_ids[noise_draw]], axis=1)
    examples = []
    for i in range(design.n):
        uniq, counts = np.unique(feats[i], return_counts=True)
        examples.append(SparseExample(uniq, counts.astype(np.float64), labels[i], validate=False))
    return TokenStream(examples, planted_ids, planted, hasher.names)


@dataclass(frozen=True)
class MulticlassDesign:
    """k-mer-like multi-class data: each class owns a signature of feature ids.

    An example of class ``c`` holds ``per_example`` signature draws, each taken
    from a random other class with probability ``confusion``, plus uniform
    background features.
    """

    n: int = 3000
    classes: int = 5
    p: int = 1 << 16
    signature: int = 40
    per_example: int = 10
    background: int = 20
    confusion: float = 0.3
    seed: int = 0


def synthetic_multiclass(design: MulticlassDesign) -> tuple[list[SparseExample], np.ndarray]:
    """Examples plus the ``(classes, signature)`` array of planted feature ids."""
    rng = np.random.default_rng(design.seed)
    ids = rng.choice(design.p, size=design.classes * design.signature, replace=False)
    signatures = ids.reshape(design.classes, design.signature)
    labels = rng.integers(0, design.classes, size=design.n)
    examples = []
    for c in labels:
        owner = np.where(
            rng.random(design.per_example) < design.confusion,
            rng.integers(0, design.classes, size=design.per_example),
            c,
        )
        picks = signatures[owner, rng.integers(0, design.signature, size=design.per_example)]
        background = rng.integers(0, design.p, size=design.background)
        feats = np.concatenate([picks, background])
        uniq, counts = np.unique(feats, return_counts=True)
        examples.append(SparseExample(uniq, counts.astype(np.float64), float(c), validate=False))
    return examples, signatures
