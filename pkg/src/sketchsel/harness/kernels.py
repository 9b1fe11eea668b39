"""Dense full-gradient recovery kernels for the synthetic studies.

Every feature is touched by every full-gradient step, so the heap-based
models reduce to "take the top k of all p candidates" each epoch. These
kernels do exactly that with numpy and are checked against
``mission_batch_step`` and ``iht_batch_step`` in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..countsketch import CountSketch, SketchGeometry
from .grid import GammaSchedule


def recovery_lr(X: np.ndarray, scale: float) -> float:
    """``scale / (2 * max squared column norm)``; the squared-loss step is ``2 * lr * X^T r``."""
    return scale / (2.0 * float(np.max(np.einsum("ij,ij->j", X, X))))


def top_indices(v: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest |v|, ordered by (-|v|, index)."""
    if k <= 0:
        return np.zeros(0, dtype=np.int64)
    a = np.abs(v)
    if k >= v.size:
        cand = np.arange(v.size)
    else:
        kth = a[np.argpartition(-a, k - 1)[k - 1]]
        above = np.flatnonzero(a > kth)
        # Boundary ties go to the smaller ids.
        cand = np.concatenate([above, np.flatnonzero(a == kth)[: k - above.size]])
    return cand[np.lexsort((cand, -a[cand]))]


@dataclass
class RecoveryRun:
    support: np.ndarray
    weights: np.ndarray
    epochs: int
    converged: bool
    diverged: bool = False
    errors: list[float] = field(default_factory=list)

    def dense(self, p: int) -> np.ndarray:
        out = np.zeros(p)
        out[self.support] = self.weights
        return out


class _HashedSketch:
    """A CountSketch with every feature's buckets precomputed for dense updates."""

    def __init__(self, p: int, geometry: SketchGeometry, seed: int):
        self.sketch = CountSketch(geometry, seed)
        self.buckets, self.signs = self.sketch.locate(np.arange(p))
        self.rows = np.arange(geometry.depth)[:, None]

    def add(self, g: np.ndarray) -> None:
        c = self.sketch.counters
        for j in range(c.shape[0]):
            c[j] += np.bincount(self.buckets[j], weights=self.signs[j] * g, minlength=c.shape[1])

    def estimates(self) -> np.ndarray:
        vals = self.signs * self.sketch.counters[self.rows, self.buckets]
        return vals[0] if vals.shape[0] == 1 else np.median(vals, axis=0)

    def decay(self, gamma: float, top: np.ndarray, weights: np.ndarray) -> None:
        self.sketch.scale(gamma)
        if top.size:
            self.sketch.update_many(top, (1.0 - gamma) * weights)


def run_recovery(
    X: np.ndarray,
    y: np.ndarray,
    k: int,
    algo: str = "mission",
    *,
    geometry: SketchGeometry | None = None,
    seed: int = 0,
    lr_scale: float = 0.5,
    gamma: GammaSchedule | None = None,
    max_epochs: int = 500,
    stable_epochs: int | None = 10,
    truth: np.ndarray | None = None,
) -> RecoveryRun:
    """Full-gradient squared-loss recovery with MISSION or IHT.

    ``geometry=None`` gives MISSION an identity sketch. With ``truth`` the
    per-epoch error ``||beta_t - truth||_2`` is recorded, and five straight
    doublings of it stop the run as diverged. ``stable_epochs=None`` runs
    all ``max_epochs``.
    """
    n, p = X.shape
    gamma = gamma or GammaSchedule()
    lr = recovery_lr(X, lr_scale)
    hashed = None
    if algo == "mission" and geometry is not None and not (geometry.mode.value == "identity" and geometry.width >= p):
        hashed = _HashedSketch(p, geometry, seed)
    elif algo not in ("mission", "iht"):
        raise ValueError(f"unknown recovery algorithm {algo!r}")
    S = np.zeros(p)
    top = np.zeros(0, dtype=np.int64)
    weights = np.zeros(0)
    prev: frozenset | None = None
    same = 0
    errors: list[float] = []
    doublings = 0
    converged = diverged = False
    epoch = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, max_epochs + 1):
            r = y - X[:, top] @ weights
            g = 2.0 * lr * (X.T @ r)
            if algo == "iht":
                beta = np.zeros(p)
                beta[top] = weights
                beta += g
                top = top_indices(beta, k)
                weights = beta[top]
            elif hashed is None:
                S += g
                top = top_indices(S, k)
                weights = S[top].copy()
                keep = S[top]
                S *= gamma(epoch - 1)
                S[top] = keep
            else:
                hashed.add(g)
                est = hashed.estimates()
                top = top_indices(est, k)
                weights = est[top]
                if np.all(np.isfinite(weights)):
                    hashed.decay(gamma(epoch - 1), top, weights)
            if not np.all(np.isfinite(weights)):
                diverged = True
                break
            if truth is not None:
                beta = np.zeros(p)
                beta[top] = weights
                err = float(np.linalg.norm(beta - truth))
                if errors and err >= 2.0 * errors[-1]:
                    doublings += 1
                else:
                    doublings = 0
                errors.append(err)
                if doublings >= 5:
                    diverged = True
                    break
            if stable_epochs is not None:
                support = frozenset(top.tolist())
                same = same + 1 if support == prev else 0
                prev = support
                if same >= stable_epochs:
                    converged = True
                    break
    return RecoveryRun(np.sort(top), weights[np.argsort(top)], epoch, converged, diverged, errors)
