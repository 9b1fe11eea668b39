"""Experiment configuration: grids, decay schedules and per-trial seeds."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..errors import InvalidSpecError

KINDS = ("phase", "attenuation", "memory", "tradeoff", "convergence")
_KIND_CODES = {kind: code for code, kind in enumerate(KINDS)}


@dataclass(frozen=True)
class GammaSchedule:
    """Per-epoch multiplier for sketched mass outside the active set."""

    start: float = 0.999
    decrement: float = 0.0005
    floor: float = 0.9

    def __post_init__(self):
        if not (0.0 < self.floor <= self.start < 1.0):
            raise InvalidSpecError(f"need 0 < floor <= start < 1, got {self}")
        if self.decrement < 0:
            raise InvalidSpecError("gamma decrement must be >= 0")

    def __call__(self, epoch: int) -> float:
        return max(self.floor, self.start - self.decrement * epoch)


@dataclass
class ExperimentGrid:
    """Parameter ranges for one experiment kind.

    Unused ranges are ignored by the experiment that does not need them.
    """

    kind: str
    p: list[int] = field(default_factory=lambda: [1000])
    n: list[int] = field(default_factory=lambda: [100])
    k: list[int] = field(default_factory=lambda: [2])
    rhos: list[float] | None = None
    alphas: list[float] = field(default_factory=lambda: [1.0 + 0.25 * i for i in range(17)])
    widths: list[int] = field(default_factory=list)
    ratios: list[float] = field(default_factory=lambda: [0.25, 0.5, 1, 2, 4, 8])
    trials: int = 20
    threshold: float = 0.5
    seed: int = 0
    out: str | None = None
    algorithms: list[str] = field(default_factory=lambda: ["mission", "iht"])
    depth: int = 3
    width_cap: int | None = None
    width_start: int = 8
    width_resolution: float = 0.125
    lr_scale: float = 0.5
    gamma: GammaSchedule = field(default_factory=GammaSchedule)
    max_epochs: int = 500
    stable_epochs: int = 10
    noise: float = 0.0
    iterations: int = 150
    sketch_width: int | None = None
    epochs: int = 3
    lr: float = 0.05
    examples: int = 3000
    classes: int = 5
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.gamma, dict):
            self.gamma = GammaSchedule(**self.gamma)
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.trials < 1:
            raise InvalidSpecError("trials must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidSpecError("success threshold must lie in (0, 1)")
        if self.lr_scale <= 0 or not math.isfinite(self.lr_scale):
            raise InvalidSpecError("lr_scale must be positive")
        if self.depth < 1 or self.workers < 1:
            raise InvalidSpecError("depth and workers must be >= 1")
        for name in ("p", "n"):
            if any(v < 1 for v in getattr(self, name)):
                raise InvalidSpecError(f"{name} values must be >= 1")
        if self.rhos is not None and any(not 0 <= r <= 1 for r in self.rhos):
            raise InvalidSpecError("rho values must lie in [0, 1]")
        if any(v < 0 for v in self.k):
            raise InvalidSpecError("k values must be >= 0")

    def ks_for(self, n: int) -> list[int]:
        """Sparsity levels for sample size ``n``: ``round(rho * n)`` when ``rhos`` is set."""
        if self.rhos is None:
            return list(self.k)
        return sorted({int(round(r * n)) for r in self.rhos})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentGrid":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpecError(f"unknown grid fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path, kind: str | None = None) -> "ExperimentGrid":
        data = json.loads(Path(path).read_text())
        if kind is not None:
            if data.setdefault("kind", kind) != kind:
                raise InvalidSpecError(f"config is for {data['kind']!r}, not {kind!r}")
        return cls.from_dict(data)

    def as_dict(self) -> dict:
        return asdict(self)


def trial_seed(base: int, kind: str, cell: tuple[int, ...], trial: int) -> np.random.SeedSequence:
    """Seed for one trial, derived only from its coordinates.

    Cells never share a generator, so results do not depend on the order in
    which cells run.
    """
    return np.random.SeedSequence([base, _KIND_CODES[kind], *cell, trial])


def seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(2, np.uint64)[0])
