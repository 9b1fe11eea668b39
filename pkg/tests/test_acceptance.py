"""Acceptance suite: one PASS/FAIL line per criterion, printed and summarised at the end."""

import math
import time

import numpy as np
import pytest

from acceptance_report import record
from oracles import median_query, pairwise_auc, rank_walk_ap, replay_grid, sorted_replay_topk
from sketchsel.countsketch import CountSketch, SketchGeometry, merge
from sketchsel.data import SparseExample, TokenStreamDesign, synthetic_token_stream
from sketchsel.harness import (
    ExperimentGrid,
    run_attenuation,
    run_convergence,
    run_memory_scaling,
    run_phase_transition,
)
from sketchsel.metrics import auc, average_precision
from sketchsel.model import DenseTopKModel, LossSpec, gradient, train
from sketchsel.model.loss import scores_from
from sketchsel.topk import TopKHeap

pytestmark = pytest.mark.acceptance


def _random_stream(rng, p, length):
    ids = rng.integers(0, p, size=length)
    deltas = rng.normal(size=length) * rng.choice([0.01, 1.0, 100.0], size=length)
    return [(int(i), float(d)) for i, d in zip(ids, deltas) if d != 0.0]


def test_01_countsketch_matches_median_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    mismatches = 0
    for _ in range(1000):
        p, d, w = int(rng.integers(1, 51)), int(rng.integers(1, 6)), int(rng.integers(1, 65))
        seed = int(rng.integers(0, 2**63))
        ups = _random_stream(rng, p, int(rng.integers(1, 120)))
        s = CountSketch(SketchGeometry(d, w), seed)
        for i, delta in ups:
            s.update(i, delta)
        grid = replay_grid(seed, d, w, ups)
        got = s.query_many(np.arange(p))
        mismatches += sum(got[i] != median_query(grid, seed, w, i) for i in range(p))
    ok = record(1, mismatches == 0, f"{mismatches} mismatched queries over 1000 streams", time.perf_counter() - t0, 10)
    assert ok


def test_02_unbiased_and_error_bound():
    t0 = time.perf_counter()
    p, depth, width, seeds = 20, 3, 16, 2000
    beta = np.random.default_rng(7).normal(size=p)
    bound = math.sqrt(3 / width) * np.linalg.norm(beta)
    q = np.empty((seeds, p))
    for seed in range(seeds):
        s = CountSketch(SketchGeometry(depth, width), seed)
        s.update_many(np.arange(p), beta)
        q[seed] = s.query_many(np.arange(p))
    err = q - beta
    se = err.std(axis=0, ddof=1) / math.sqrt(seeds)
    biased = int(np.sum(np.abs(err.mean(axis=0)) > 3 * se))
    violation = float(np.mean(np.abs(err) > bound))
    ok = record(
        2, biased == 0 and violation < 0.05,
        f"{biased}/{p} coordinates with mean error beyond 3 SE; bound violated at rate {violation:.4f}",
        time.perf_counter() - t0, 30,
    )
    assert ok


def test_03_merge_and_scale_commute_with_replay():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    bad = 0
    for _ in range(100):
        p, d, w = int(rng.integers(1, 60)), int(rng.integers(1, 6)), int(rng.integers(1, 40))
        seed = int(rng.integers(0, 2**63))
        ua, ub = _random_stream(rng, p, 50), _random_stream(rng, p, 50)
        g = SketchGeometry(d, w)
        a, b = CountSketch(g, seed), CountSketch(g, seed)
        for i, x in ua:
            a.update(i, x)
        for i, x in ub:
            b.update(i, x)
        ref_a, ref_b = np.array(replay_grid(seed, d, w, ua)), np.array(replay_grid(seed, d, w, ub))
        bad += not np.array_equal(merge(a, b).counters, ref_a + ref_b)
        # Power-of-two factors are exact, so scaling the sketch equals sketching the scaled stream.
        c = 2.0 ** int(rng.integers(-8, 9))
        scaled = a.copy()
        scaled.scale(c)
        bad += not np.array_equal(scaled.counters, np.array(replay_grid(seed, d, w, [(i, c * x) for i, x in ua])))
        gamma = float(rng.random())
        decayed = a.copy()
        decayed.scale(gamma)
        bad += not np.array_equal(decayed.counters, ref_a * gamma)
    ok = record(3, bad == 0, f"{bad} non-exact cases over 100 random cases", time.perf_counter() - t0, 5)
    assert ok


def _fd(loss, ex, weights, c, fid, h=1e-5):
    def at(delta):
        w = [dict(x) for x in weights]
        w[c][fid] = w[c].get(fid, 0.0) + delta
        s = scores_from(w, ex)
        return loss.value(ex.label, s if loss.multiclass else s[0])

    return (at(h) - at(-h)) / (2 * h)


def test_04_gradients_match_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    worst = {}
    for kind in ("squared", "logistic", "hinge", "xent"):
        loss = LossSpec(kind, 0.25)
        classes = 4 if kind == "xent" else 1
        done, worst[kind] = 0, 0.0
        while done < 50:
            ids = np.sort(rng.choice(40, 8, replace=False))
            if kind == "xent":
                label = float(rng.integers(0, classes))
            elif kind == "squared":
                label = float(rng.normal())
            else:
                label = float(rng.choice([-1.0, 1.0]))
            ex = SparseExample(ids, rng.normal(size=8), label)
            w = [{int(i): float(rng.normal()) for i in rng.choice(40, 12, replace=False)} for _ in range(classes)]
            if kind == "hinge" and abs(1 - label * scores_from(w, ex)[0]) < 1e-3:
                continue  # the hinge is not differentiable at the margin
            step = gradient(loss, ex, w)
            for c in range(classes):
                fd = np.array([_fd(loss, ex, w, c, int(i)) for i in ex.indices])
                analytic = -step.values[c] / loss.lr
                rel = np.linalg.norm(fd - analytic) / max(np.linalg.norm(analytic), 1e-12)
                if np.linalg.norm(analytic) == 0:
                    rel = np.linalg.norm(fd)
                worst[kind] = max(worst[kind], float(rel))
            done += 1
    ok = record(
        4, all(v <= 1e-6 for v in worst.values()),
        "worst relative error " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()),
        time.perf_counter() - t0, 10,
    )
    assert ok


def test_05_attenuation_table():
    t0 = time.perf_counter()
    res = run_attenuation(ExperimentGrid("attenuation", p=[1000], n=[100], k=[2], trials=100, seed=0))
    stats = res.summary["1000/100/2"]
    m, i = stats["mission"], stats["iht"]
    passed = (
        m["acc_at_first"] == 1.0
        and 2.0 <= m["mean_max_alpha"] <= 3.4
        and 1.0 <= i["mean_max_alpha"] <= 2.2
        and m["mean_max_alpha"] > i["mean_max_alpha"]
    )
    ok = record(
        5, passed,
        f"MISSION acc@1={m['acc_at_first']:.2f} max alpha {m['mean_max_alpha']:.2f}+-{m['sd_max_alpha']:.2f}; "
        f"IHT acc@1={i['acc_at_first']:.2f} max alpha {i['mean_max_alpha']:.2f}+-{i['sd_max_alpha']:.2f}",
        time.perf_counter() - t0, 600,
    )
    assert ok


def test_06_phase_transition():
    t0 = time.perf_counter()
    grid = ExperimentGrid(
        "phase", p=[1000], n=[100, 200, 300, 400, 500, 600], rhos=[round(0.02 * i, 2) for i in range(1, 26)],
        trials=20, seed=0,
    )
    res = run_phase_transition(grid)
    frac = res.summary["mission_dominates_fraction"]
    contours = ", ".join(
        f"p/n={cell}: {c['mission']:.1f} vs {c['iht']:.1f}" for cell, c in res.summary["contours"].items()
    )
    ok = record(6, frac >= 0.8, f"MISSION contour higher at {frac:.0%} of n ({contours})", time.perf_counter() - t0, 1200)
    assert ok


def test_07_memory_scaling():
    t0 = time.perf_counter()
    grid = ExperimentGrid("memory", p=[1 << 10, 1 << 12, 1 << 14, 1 << 16], n=[100], k=[5], trials=10, depth=3, seed=0)
    res = run_memory_scaling(grid)
    ratio = res.summary.get("width_ratio")
    widths = ", ".join(f"p={r['p']}: {r['min_width']}" for r in res.rows)
    lower = " (lower bound)" if res.summary.get("width_ratio_is_lower_bound") else ""
    ok = record(
        7, ratio is not None and ratio < 8,
        f"minimal widths {widths}; width ratio {ratio}{lower} for 64x dimension",
        time.perf_counter() - t0, 1800,
    )
    assert ok


def test_08_convergence():
    t0 = time.perf_counter()
    grid = ExperimentGrid("convergence", p=[1000], n=[400, 1600], k=[5], noise=0.1, iterations=150, trials=5, seed=0)
    s = run_convergence(grid).summary
    small, large = s["1000/400/5"], s["1000/1600/5"]
    passed = (
        small["diverged"] == 0
        and small["mean_decay_ratio"] is not None
        and small["mean_decay_ratio"] < 0.9
        and small["max_plateau_drift"] < 0.5
        and large["mean_floor"] < small["mean_floor"]
    )
    ok = record(
        8, passed,
        f"n=400 decay ratio {small['mean_decay_ratio']:.3f}, plateau {small['mean_floor']:.4f} "
        f"(drift {small['max_plateau_drift']:.3f}); n=1600 plateau {large['mean_floor']:.4f}",
        time.perf_counter() - t0, 300,
    )
    assert ok


def test_09_heap_matches_sorted_replay():
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    ids = rng.integers(0, 5000, size=100_000).tolist()
    weights = (rng.normal(size=100_000) * rng.choice([0.1, 1, 10], size=100_000)).tolist()
    offers = list(zip(ids, weights))
    exact = True
    for k in (1, 10, 100):
        heap = TopKHeap(k)
        heap.offer_many(ids, weights)
        exact &= heap.items() == sorted_replay_topk(offers, k)
    lazy_ok = True
    for k in (1, 10, 100):
        heap = TopKHeap(k, epsilon=0.5)
        for start in range(0, 100_000, 10_000):
            heap.offer_many(ids[start:start + 10_000], weights[start:start + 10_000])
            try:
                heap.check_invariants()
            except AssertionError:
                lazy_ok = False
    ok = record(
        9, exact and lazy_ok, f"eager heaps exact: {exact}; lazy staleness invariant held: {lazy_ok}",
        time.perf_counter() - t0, 10,
    )
    assert ok


def test_10_metric_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1010)
    bad_auc = bad_ap = 0
    for _ in range(100):
        n = int(rng.integers(2, 300))
        labels = rng.choice([-1, 1], size=n)
        labels[:2] = [-1, 1]
        scores = rng.integers(0, 20, size=n) / 4 if rng.random() < 0.5 else rng.normal(size=n)
        bad_auc += auc(scores, labels) != pairwise_auc(scores.tolist(), labels.tolist())
        bad_ap += average_precision(scores, labels) != rank_walk_ap(scores.tolist(), labels.tolist())
    ok = record(10, bad_auc == bad_ap == 0, f"AUC mismatches {bad_auc}/100, AP mismatches {bad_ap}/100",
                time.perf_counter() - t0, 10)
    assert ok


def test_11_token_stream_smoke():
    t0 = time.perf_counter()
    ts = synthetic_token_stream(TokenStreamDesign(n=50_000, bits=20, informative=100, seed=0))
    train_set, test_set = ts.examples[:40_000], ts.examples[40_000:]
    model = DenseTopKModel(200, "mission", geometry=SketchGeometry(5, 1 << 14), seed=1)
    train(model, LossSpec("logistic", 0.1), train_set, epochs=1, shuffle_seed=0)
    value = auc([model.scores(e)[0] for e in test_set], [e.label for e in test_set])
    planted = len({f for f, _ in model.top()} & set(ts.planted_ids.tolist()))
    ok = record(11, value >= 0.9 and planted >= 80, f"held-out AUC {value:.4f}; {planted}/100 planted features in the heap",
                time.perf_counter() - t0, 120)
    assert ok
