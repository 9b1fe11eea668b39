"""Synthetic studies: phase transition, attenuation, memory scaling, trade-off, convergence."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..countsketch import SketchGeometry
from ..data.synthetic import MulticlassDesign, SyntheticDesign, generate_design, synthetic_multiclass
from ..metrics import accuracy, support_recovered
from ..model import DenseTopKModel, LossSpec, train
from .grid import ExperimentGrid, seed_int, trial_seed
from .kernels import run_recovery

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    kind: str
    rows: list[dict]
    summary: dict = field(default_factory=dict)
    grid: ExperimentGrid | None = None


def _map(fn: Callable, tasks: Iterable, workers: int) -> list:
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _recover(grid: ExperimentGrid, design: SyntheticDesign, algo: str, geometry=None, sketch_seed=0) -> bool:
    d = generate_design(design)
    run = run_recovery(
        d.X,
        d.y,
        design.k,
        algo,
        geometry=geometry,
        seed=sketch_seed,
        lr_scale=grid.lr_scale,
        gamma=grid.gamma,
        max_epochs=grid.max_epochs,
        stable_epochs=grid.stable_epochs,
    )
    return support_recovered(run.support, d.support)


# -- phase transition ---------------------------------------------------------------


def _phase_cell(args) -> dict:
    grid, p, n, k = args
    wins = {a: 0 for a in grid.algorithms}
    for t in range(grid.trials):
        seed = trial_seed(grid.seed, "phase", (p, n, k), t)
        design = SyntheticDesign(p=p, n=n, k=k, noise=grid.noise, seed=seed)
        for algo in grid.algorithms:
            wins[algo] += _recover(grid, design, algo)
    return {"p": p, "n": n, "k": k, "trials": grid.trials, "status": "ok",
            **{f"rate_{a}": wins[a] / grid.trials for a in grid.algorithms}}


def contour(ks: list[int], rates: list[float], level: float) -> float:
    """Largest k where the success rate stays at or above ``level``, linearly interpolated.

    Rates are read in ascending k; the first crossing below ``level`` is
    interpolated against the previous point. Returns the last k if no
    crossing occurs and 0 if the first point already fails.
    """
    pairs = sorted(zip(ks, rates))
    prev_k, prev_r = None, None
    for k, r in pairs:
        if r < level:
            if prev_k is None:
                return 0.0
            return prev_k + (prev_r - level) / (prev_r - r) * (k - prev_k)
        prev_k, prev_r = k, r
    return float(pairs[-1][0]) if pairs else 0.0


def run_phase_transition(grid: ExperimentGrid) -> ExperimentResult:
    tasks, rows = [], []
    for p in grid.p:
        for n in grid.n:
            for k in grid.ks_for(n):
                if k > min(n, p):
                    log.warning("skipping infeasible cell p=%d n=%d k=%d", p, n, k)
                    rows.append({"p": p, "n": n, "k": k, "trials": 0, "status": "skipped"})
                else:
                    tasks.append((grid, p, n, k))
    rows.extend(_map(_phase_cell, tasks, grid.workers))
    rows.sort(key=lambda r: (r["p"], r["n"], r["k"]))
    contours = {}
    for p in grid.p:
        for n in grid.n:
            cell = [r for r in rows if r["p"] == p and r["n"] == n and r["status"] == "ok"]
            contours[f"{p}/{n}"] = {
                a: contour([r["k"] for r in cell], [r[f"rate_{a}"] for r in cell], grid.threshold)
                for a in grid.algorithms
            }
    summary = {"contours": contours}
    if {"mission", "iht"} <= set(grid.algorithms) and contours:
        wins = sum(c["mission"] > c["iht"] for c in contours.values())
        summary["mission_dominates_fraction"] = wins / len(contours)
    return ExperimentResult("phase", rows, summary, grid)


# -- attenuation ------------------------------------------------------------------------


def _attenuation_trial(args) -> dict:
    grid, p, n, k, t = args
    seed = trial_seed(grid.seed, "attenuation", (p, n, k), t)
    row = {"p": p, "n": n, "k": k, "trial": t}
    for algo in grid.algorithms:
        best = None
        for alpha in sorted(grid.alphas):
            design = SyntheticDesign(p=p, n=n, k=k, noise=grid.noise, attenuation=alpha, seed=seed)
            if not _recover(grid, design, algo):
                break
            best = alpha
        row[f"max_alpha_{algo}"] = best
    return row


def run_attenuation(grid: ExperimentGrid) -> ExperimentResult:
    """Largest tolerated attenuation per trial, climbing the ladder until the first failure."""
    tasks = [(grid, p, n, k, t) for p in grid.p for n in grid.n for k in grid.k for t in range(grid.trials)]
    rows = _map(_attenuation_trial, tasks, grid.workers)
    summary = {}
    for p in grid.p:
        for n in grid.n:
            for k in grid.k:
                cell = [r for r in rows if (r["p"], r["n"], r["k"]) == (p, n, k)]
                keys = [f"max_alpha_{a}" for a in grid.algorithms]
                # Averages use only trials every algorithm solves at the first rung.
                common = [r for r in cell if all(r[key] is not None for key in keys)]
                stats = {}
                for a, key in zip(grid.algorithms, keys):
                    vals = [r[key] for r in common]
                    stats[a] = {
                        "acc_at_first": sum(r[key] is not None for r in cell) / len(cell),
                        "mean_max_alpha": float(np.mean(vals)) if vals else None,
                        "sd_max_alpha": float(np.std(vals)) if vals else None,
                        "trials_averaged": len(vals),
                    }
                summary[f"{p}/{n}/{k}"] = stats
    return ExperimentResult("attenuation", rows, summary, grid)


# -- memory scaling ------------------------------------------------------------------------


def _all_recover(grid: ExperimentGrid, p: int, n: int, k: int, width: int) -> bool:
    geometry = SketchGeometry(grid.depth, width)
    for t in range(grid.trials):
        seed = trial_seed(grid.seed, "memory", (p, n, k), t)
        design = SyntheticDesign(p=p, n=n, k=k, noise=grid.noise, seed=seed)
        if not _recover(grid, design, "mission", geometry, seed_int(seed)):
            return False
    return True


def minimal_width(grid: ExperimentGrid, p: int, n: int, k: int) -> tuple[int | None, list[tuple[int, bool]]]:
    """Doubling then bisection; ``None`` when even the cap fails (censored)."""
    cap = grid.width_cap or 2 * p
    probes: list[tuple[int, bool]] = []

    def ok(w: int) -> bool:
        res = _all_recover(grid, p, n, k, w)
        probes.append((w, res))
        return res

    lo, hi = 0, max(1, grid.width_start)
    while not ok(hi):
        lo = hi
        if hi >= cap:
            return None, probes
        hi = min(2 * hi, cap)
    while hi - lo > max(1, int(grid.width_resolution * hi)):
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi, probes


def _memory_cell(args) -> dict:
    grid, p, n, k = args
    width, probes = minimal_width(grid, p, n, k)
    return {"p": p, "n": n, "k": k, "depth": grid.depth, "min_width": width,
            "censored": width is None, "cap": grid.width_cap or 2 * p,
            "counters": None if width is None else width * grid.depth, "probes": len(probes)}


def log2_squared_fit(ps: list[int], widths: list[int]) -> tuple[float, float] | None:
    """Least-squares ``width ~ a + b * (log2 p)^2``."""
    if len(ps) < 2:
        return None
    A = np.column_stack([np.ones(len(ps)), np.log2(np.asarray(ps, dtype=float)) ** 2])
    coef, *_ = np.linalg.lstsq(A, np.asarray(widths, dtype=float), rcond=None)
    return float(coef[0]), float(coef[1])


def run_memory_scaling(grid: ExperimentGrid) -> ExperimentResult:
    tasks = [(grid, p, n, k) for n in grid.n for k in grid.k for p in sorted(grid.p)]
    rows = _map(_memory_cell, tasks, grid.workers)
    done = [r for r in rows if not r["censored"]]
    fit = log2_squared_fit([r["p"] for r in done], [r["min_width"] for r in done])
    summary = {"fit_a_plus_b_log2p_sq": fit}
    lo, hi = min(grid.p), max(grid.p)
    first = next((r for r in rows if r["p"] == lo), None)
    last = next((r for r in rows if r["p"] == hi), None)
    if first and last and lo != hi and first["min_width"]:
        top = last["min_width"] if last["min_width"] else last["cap"]
        summary["width_ratio"] = top / first["min_width"]
        summary["width_ratio_is_lower_bound"] = last["censored"]
        summary["dimension_ratio"] = hi / lo
    return ExperimentResult("memory", rows, summary, grid)


# -- memory/accuracy trade-off ------------------------------------------------------------------


def _tradeoff_point(args) -> dict:
    grid, k, ratio, t = args
    # Every ratio sees the same data per trial, so points are paired.
    seed = trial_seed(grid.seed, "tradeoff", (grid.p[0], k), t)
    design = MulticlassDesign(n=grid.examples, classes=grid.classes, p=grid.p[0], seed=seed_int(seed))
    examples, _ = synthetic_multiclass(design)
    cut = (2 * len(examples)) // 3
    train_set, test_set = examples[:cut], examples[cut:]
    if ratio == math.inf:
        geometry = SketchGeometry.identity(design.p)
    else:
        geometry = SketchGeometry(grid.depth, max(1, int(round(ratio * k))))
    model = DenseTopKModel(k, "mission", classes=design.classes, geometry=geometry, seed=seed_int(seed))
    train(model, LossSpec("xent", grid.lr), train_set, epochs=grid.epochs, shuffle_seed=t)
    pred = [int(np.argmax(model.scores(e))) for e in test_set]
    acc = accuracy(pred, [int(e.label) for e in test_set])
    return {"k": k, "ratio": ratio, "width": geometry.width, "trial": t, "accuracy": acc}


def run_tradeoff(grid: ExperimentGrid) -> ExperimentResult:
    """Accuracy against sketch-width-to-k ratio, plus an identity-sketch reference."""
    ratios = sorted(set(float(r) for r in grid.ratios) | {1.0}) + [math.inf]
    k = grid.k[0]
    tasks = [(grid, k, r, t) for r in ratios for t in range(grid.trials)]
    trials = _map(_tradeoff_point, tasks, grid.workers)
    rows = []
    for r in ratios:
        accs = [x["accuracy"] for x in trials if x["ratio"] == r]
        rows.append({"k": k, "ratio": "identity" if r == math.inf else r,
                     "width": next(x["width"] for x in trials if x["ratio"] == r),
                     "accuracy": float(np.mean(accs)), "sd": float(np.std(accs)), "trials": len(accs)})
    finite = rows[:-1]
    noise = max(2.0 * max(r["sd"] for r in rows) / math.sqrt(grid.trials), 1e-12)
    drops = [b["accuracy"] - a["accuracy"] for a, b in zip(finite, finite[1:])]
    summary = {
        "identity_accuracy": rows[-1]["accuracy"],
        "noise_band": noise,
        "monotone_within_noise": all(d >= -noise for d in drops),
    }
    return ExperimentResult("tradeoff", rows, summary, grid)


# -- convergence --------------------------------------------------------------------------------


def decay_profile(errors: list[float], window: int = 20, above: float = 2.0) -> dict:
    """Plateau level and the mean successive-error ratio before it is reached.

    The plateau is the mean of the last ``window`` errors; the decay phase
    is every step whose previous error exceeds ``above`` times the plateau.
    """
    if len(errors) < 2:
        return {"floor": errors[-1] if errors else None, "decay_ratio": None, "decay_steps": 0, "plateau_drift": None}
    tail = errors[-window:]
    floor = float(np.mean(tail))
    ratios = [b / a for a, b in zip(errors, errors[1:]) if a > above * floor and a > 0]
    drift = (max(tail) - min(tail)) / floor if floor > 0 else 0.0
    return {
        "floor": floor,
        "decay_ratio": float(np.mean(ratios)) if ratios else None,
        "decay_steps": len(ratios),
        "plateau_drift": drift,
    }


def _convergence_trial(args) -> dict:
    grid, p, n, k, t = args
    seed = trial_seed(grid.seed, "convergence", (p, n, k), t)
    design = SyntheticDesign(p=p, n=n, k=k, noise=grid.noise, seed=seed)
    d = generate_design(design)
    geometry = SketchGeometry(grid.depth, grid.sketch_width) if grid.sketch_width else None
    run = run_recovery(
        d.X, d.y, k, "mission", geometry=geometry, seed=seed_int(seed), lr_scale=grid.lr_scale,
        gamma=grid.gamma, max_epochs=grid.iterations, stable_epochs=None, truth=d.beta,
    )
    prof = decay_profile(run.errors)
    return {"p": p, "n": n, "k": k, "trial": t, "diverged": run.diverged,
            "recovered": support_recovered(run.support, d.support), **prof,
            "errors": run.errors}


def run_convergence(grid: ExperimentGrid) -> ExperimentResult:
    tasks = [(grid, p, n, k, t) for p in grid.p for n in grid.n for k in grid.k for t in range(grid.trials)]
    trials = _map(_convergence_trial, tasks, grid.workers)
    rows, summary = [], {}
    for r in trials:
        for it, err in enumerate(r["errors"], start=1):
            rows.append({"p": r["p"], "n": r["n"], "k": r["k"], "trial": r["trial"], "iteration": it, "error": err})
    for p in grid.p:
        for n in grid.n:
            for k in grid.k:
                cell = [r for r in trials if (r["p"], r["n"], r["k"]) == (p, n, k)]
                ok = [r for r in cell if not r["diverged"]]
                ratios = [r["decay_ratio"] for r in ok if r["decay_ratio"] is not None]
                summary[f"{p}/{n}/{k}"] = {
                    "diverged": sum(r["diverged"] for r in cell),
                    "recovered": sum(r["recovered"] for r in cell),
                    "mean_decay_ratio": float(np.mean(ratios)) if ratios else None,
                    "mean_floor": float(np.mean([r["floor"] for r in ok])) if ok else None,
                    "max_plateau_drift": max((r["plateau_drift"] for r in ok), default=None),
                }
    return ExperimentResult("convergence", rows, summary, grid)


RUNNERS = {
    "phase": run_phase_transition,
    "attenuation": run_attenuation,
    "memory": run_memory_scaling,
    "tradeoff": run_tradeoff,
    "convergence": run_convergence,
}


def run_experiment(grid: ExperimentGrid) -> ExperimentResult:
    return RUNNERS[grid.kind](grid)
