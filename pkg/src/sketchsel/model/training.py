"""Epoch loop shared by every trainer."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field

from ..data.stream import Source, iter_epoch
from ..errors import ParseError, StreamError
from .loss import LossSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StoppingRule:
    """Stop after ``max_epochs`` or once the relative epoch-loss improvement drops below ``plateau_tol``."""

    max_epochs: int
    plateau_tol: float | None = None

    def plateaued(self, previous: float | None, current: float) -> bool:
        if self.plateau_tol is None or previous is None:
            return False
        scale = max(abs(previous), 1e-300)
        return (previous - current) / scale < self.plateau_tol


@dataclass
class EpochStats:
    epoch: int
    loss: float
    steps: int
    seconds: float
    extra: dict = field(default_factory=dict)


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    steps: int = 0
    seconds: float = 0.0
    stopped_early: bool = False

    @property
    def losses(self) -> list[float]:
        return [e.loss for e in self.epochs]

    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "seconds": self.seconds,
            "stopped_early": self.stopped_early,
            "epochs": [
                {"epoch": e.epoch, "loss": e.loss, "steps": e.steps, "seconds": e.seconds, **e.extra}
                for e in self.epochs
            ],
        }


def train(
    model,
    loss: LossSpec,
    source: Source,
    epochs: int | None = None,
    stop: StoppingRule | None = None,
    *,
    batch_size: int = 1,
    shuffle_seed: int | None = None,
    on_epoch: Callable[[int, object], dict | None] | None = None,
) -> TrainReport:
    """Run ``model.step`` (or ``batch_step``) over ``source`` epoch by epoch.

    The reported epoch loss is the mean pre-update loss of the examples seen
    (progressive validation). ``on_epoch(epoch, model)`` may return a dict of
    extra per-epoch fields, e.g. a held-out metric.
    """
    if stop is None:
        stop = StoppingRule(max_epochs=0 if epochs is None else epochs)
    elif epochs is not None:
        stop = StoppingRule(min(epochs, stop.max_epochs), stop.plateau_tol)
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    report = TrainReport()
    started = time.perf_counter()
    previous = None
    for epoch in range(stop.max_epochs):
        t0 = time.perf_counter()
        total, count, steps = 0.0, 0, 0
        batch = []
        record = -1
        try:
            for record, example in enumerate(iter_epoch(source, epoch, shuffle_seed)):
                if batch_size == 1:
                    total += model.step(loss, example)
                    count += 1
                    steps += 1
                    continue
                batch.append(example)
                if len(batch) == batch_size:
                    total += model.batch_step(loss, batch) * len(batch)
                    count += len(batch)
                    steps += 1
                    batch = []
            if batch:
                total += model.batch_step(loss, batch) * len(batch)
                count += len(batch)
                steps += 1
        except (ParseError, StreamError):
            raise
        except OSError as exc:
            raise StreamError(f"epoch {epoch}: {exc}", record=record + 1) from exc
        model.end_epoch()
        mean = total / count if count else 0.0
        stats = EpochStats(epoch, mean, steps, time.perf_counter() - t0)
        if on_epoch is not None:
            stats.extra.update(on_epoch(epoch, model) or {})
        report.epochs.append(stats)
        report.steps += steps
        log.info("epoch %d loss=%.6g steps=%d %.2fs", epoch, mean, steps, stats.seconds)
        if stop.plateaued(previous, mean):
            report.stopped_early = True
            break
        previous = mean
    report.seconds = time.perf_counter() - started
    return report


def predict(model, example) -> float | list[float]:
    """Score of ``example``: a float for single-output models, per-class list otherwise."""
    scores = model.scores(example)
    return float(scores[0]) if len(scores) == 1 else scores.tolist()
