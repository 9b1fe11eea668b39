import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sketchsel.countsketch import SketchGeometry
from sketchsel.data import SyntheticDesign, generate_design
from sketchsel.errors import InvalidSpecError
from sketchsel.harness import (
    ExperimentGrid,
    GammaSchedule,
    contour,
    decay_profile,
    log2_squared_fit,
    recovery_lr,
    run_attenuation,
    run_convergence,
    run_memory_scaling,
    run_phase_transition,
    run_recovery,
    run_tradeoff,
    top_indices,
    trial_seed,
    write_result,
)
from sketchsel.harness.experiments import _phase_cell
from sketchsel.model import DenseTopKModel, LossSpec, decay_unselected


@given(st.floats(0.5, 0.9999), st.floats(0, 0.01), st.floats(0.01, 1.0), st.integers(0, 5000))
def test_gamma_schedule_monotone_in_unit_interval(start, dec, floor_frac, epoch):
    g = GammaSchedule(start, dec, start * floor_frac)
    assert 0 < g(epoch + 1) <= g(epoch) < 1


def test_gamma_defaults_and_validation():
    g = GammaSchedule()
    assert g(0) == 0.999 and g(10_000) == 0.9
    with pytest.raises(InvalidSpecError):
        GammaSchedule(1.0, 0, 0.9)
    with pytest.raises(InvalidSpecError):
        GammaSchedule(0.9, 0, 0.95)


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="nope"), dict(kind="phase", trials=0), dict(kind="phase", threshold=1.0), dict(kind="phase", k=[-1])],
)
def test_grid_validation(kwargs):
    with pytest.raises(InvalidSpecError):
        ExperimentGrid(**kwargs)


def test_grid_from_dict_rejects_unknown_fields(tmp_path):
    with pytest.raises(InvalidSpecError):
        ExperimentGrid.from_dict({"kind": "phase", "bogus": 1})
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"n": [50], "gamma": {"start": 0.99, "decrement": 0.0, "floor": 0.99}}))
    grid = ExperimentGrid.load(path, "phase")
    assert grid.kind == "phase" and grid.gamma.start == 0.99


def test_trial_seeds_depend_only_on_coordinates():
    a = trial_seed(0, "phase", (1000, 100, 5), 3).generate_state(4)
    b = trial_seed(0, "phase", (1000, 100, 5), 3).generate_state(4)
    c = trial_seed(0, "phase", (1000, 100, 5), 4).generate_state(4)
    d = trial_seed(0, "attenuation", (1000, 100, 5), 3).generate_state(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c) and not np.array_equal(a, d)


def test_top_indices_tie_rule():
    assert top_indices(np.array([1.0, -3.0, 3.0, 0.5]), 2).tolist() == [1, 2]
    assert top_indices(np.array([1.0]), 0).size == 0
    assert top_indices(np.array([2.0, 1.0, -1.0, 1.0, 1.0]), 3).tolist() == [0, 1, 2]


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=30), st.integers(0, 30))
def test_top_indices_matches_full_sort(vals, k):
    v = np.array(vals, dtype=float)
    expected = sorted(range(v.size), key=lambda i: (-abs(v[i]), i))[:k]
    assert top_indices(v, k).tolist() == expected


def _small_problem(seed=0, p=40, n=30, k=3):
    d = generate_design(SyntheticDesign(p=p, n=n, k=k, seed=seed))
    return d, [row for row in d.examples()]


@pytest.mark.parametrize("geometry", [None, SketchGeometry(3, 16)])
def test_mission_kernel_matches_heap_model(geometry):
    d, exs = _small_problem()
    lr = recovery_lr(d.X, 0.5)
    gamma = GammaSchedule()
    run = run_recovery(d.X, d.y, 3, "mission", geometry=geometry, seed=7, lr_scale=0.5,
                       gamma=gamma, max_epochs=25, stable_epochs=None)
    model = DenseTopKModel(3, "mission", geometry=geometry or SketchGeometry.identity(40), seed=7)
    loss = LossSpec("squared", lr)
    for epoch in range(25):
        model.batch_step(loss, exs)
        decay_unselected(model, gamma(epoch))
    heap = model.heaps[0].items()
    assert sorted(heap) == run.support.tolist()
    assert np.allclose([heap[i] for i in run.support.tolist()], run.weights, rtol=1e-9, atol=1e-12)


def test_iht_kernel_matches_heap_model():
    d, exs = _small_problem(seed=1)
    lr = recovery_lr(d.X, 0.5)
    run = run_recovery(d.X, d.y, 3, "iht", lr_scale=0.5, max_epochs=25, stable_epochs=None)
    model = DenseTopKModel(3, "iht")
    for _ in range(25):
        model.batch_step(LossSpec("squared", lr), exs)
    heap = model.heaps[0].items()
    assert sorted(heap) == run.support.tolist()
    assert np.allclose([heap[i] for i in run.support.tolist()], run.weights, rtol=1e-9, atol=1e-12)


def test_mission_recovers_with_wide_sketch():
    wins = 0
    for t in range(100):
        d = generate_design(SyntheticDesign(p=1000, n=600, k=5, seed=trial_seed(0, "memory", (1, 2), t)))
        run = run_recovery(d.X, d.y, 5, "mission", geometry=SketchGeometry(3, 4096), seed=t)
        wins += set(d.support.tolist()) <= set(run.support.tolist())
    assert wins >= 95


def test_contour_interpolation():
    assert contour([1, 2, 3, 4], [1.0, 1.0, 0.0, 0.0], 0.5) == 2.5
    assert contour([1, 2], [1.0, 0.9], 0.5) == 2.0
    assert contour([1, 2], [0.2, 0.0], 0.5) == 0.0


def test_phase_cells_trivial_and_overdetermined():
    grid = ExperimentGrid("phase", p=[50], n=[60], k=[0, 3, 80], trials=20)
    res = run_phase_transition(grid)
    by_k = {r["k"]: r for r in res.rows}
    assert by_k[0]["rate_mission"] == by_k[0]["rate_iht"] == 1.0
    assert by_k[3]["rate_mission"] >= 0.95 and by_k[3]["rate_iht"] >= 0.95
    assert by_k[80]["status"] == "skipped"


def test_phase_is_deterministic_and_order_independent():
    grid = ExperimentGrid("phase", p=[200], n=[40, 80], rhos=[0.1, 0.3], trials=3, seed=5)
    rows = run_phase_transition(grid).rows
    assert rows == run_phase_transition(grid).rows
    reversed_rows = [_phase_cell((grid, 200, n, k)) for n, k in reversed([(r["n"], r["k"]) for r in rows])]
    assert sorted(reversed_rows, key=lambda r: (r["n"], r["k"])) == rows


def test_attenuation_protocol():
    grid = ExperimentGrid("attenuation", p=[200], n=[60], k=[2], trials=6, alphas=[1, 1.5, 2, 2.5, 3, 4])
    res = run_attenuation(grid)
    stats = res.summary["200/60/2"]
    common = [r for r in res.rows if r["max_alpha_mission"] is not None and r["max_alpha_iht"] is not None]
    assert stats["mission"]["trials_averaged"] == len(common)
    if common:
        assert stats["iht"]["mean_max_alpha"] == pytest.approx(np.mean([r["max_alpha_iht"] for r in common]))
    # Ladder monotonicity: every rung at or below a trial's maximum recovers.
    row = res.rows[0]
    seed = trial_seed(grid.seed, "attenuation", (200, 60, 2), 0)
    for alpha in grid.alphas:
        if row["max_alpha_mission"] is None or alpha > row["max_alpha_mission"]:
            break
        d = generate_design(SyntheticDesign(p=200, n=60, k=2, attenuation=alpha, seed=seed))
        run = run_recovery(d.X, d.y, 2, "mission", lr_scale=grid.lr_scale)
        assert set(d.support.tolist()) <= set(run.support.tolist())


def test_memory_scaling_small_ladder():
    grid = ExperimentGrid("memory", p=[5, 64, 512], n=[100], k=[5], trials=4, depth=3)
    res = run_memory_scaling(grid)
    widths = {r["p"]: r["min_width"] for r in res.rows}
    assert widths[5] <= 2 * 5
    assert widths[5] <= widths[64] <= widths[512]
    assert res.summary["fit_a_plus_b_log2p_sq"] is not None


def test_memory_scaling_censored():
    grid = ExperimentGrid("memory", p=[512], n=[30], k=[10], trials=2, width_cap=16)
    row = run_memory_scaling(grid).rows[0]
    assert row["censored"] and row["min_width"] is None


def test_log2_fit_recovers_quadratic():
    ps = [2**i for i in range(4, 10)]
    a, b = log2_squared_fit(ps, [3 + 2 * np.log2(p) ** 2 for p in ps])
    assert a == pytest.approx(3) and b == pytest.approx(2)


def test_tradeoff_curve():
    grid = ExperimentGrid("tradeoff", p=[1 << 12], k=[20], ratios=[0.5, 2, 64], trials=2, examples=600, epochs=2, lr=0.1)
    res = run_tradeoff(grid)
    ratios = [r["ratio"] for r in res.rows]
    assert 1.0 in ratios and ratios[-1] == "identity"
    top = next(r for r in res.rows if r["ratio"] == 64)
    assert abs(top["accuracy"] - res.summary["identity_accuracy"]) <= 0.05
    assert res.summary["monotone_within_noise"]


def test_convergence_plain_gradient_descent():
    # With k >= p and no noise MISSION is gradient descent; the late per-epoch
    # error ratio is the spectral contraction factor of the iteration map.
    d = generate_design(SyntheticDesign(p=10, n=50, k=10, seed=3))
    run = run_recovery(d.X, d.y, 10, "mission", lr_scale=0.5, max_epochs=300, stable_epochs=None, truth=d.beta)
    errs = np.array(run.errors)
    assert errs[-1] < 1e-8
    lr = recovery_lr(d.X, 0.5)
    rate = np.max(np.abs(1 - 2 * lr * np.linalg.eigvalsh(d.X.T @ d.X)))
    assert np.all(errs[1:60] < errs[:59])
    assert errs[80] / errs[79] == pytest.approx(rate, abs=1e-4)


def test_convergence_floors():
    base = dict(p=[1000], k=[5], trials=2, noise=0.1, iterations=120)
    ident = run_convergence(ExperimentGrid("convergence", n=[400, 1600], **base)).summary
    sk = run_convergence(ExperimentGrid("convergence", n=[400], depth=5, sketch_width=256, **base)).summary
    assert ident["1000/1600/5"]["mean_floor"] < ident["1000/400/5"]["mean_floor"]
    assert sk["1000/400/5"]["mean_floor"] >= ident["1000/400/5"]["mean_floor"] - 1e-12
    assert ident["1000/400/5"]["mean_decay_ratio"] < 0.9


def test_divergence_is_reported():
    d = generate_design(SyntheticDesign(p=30, n=20, k=5, seed=0))
    run = run_recovery(d.X, d.y, 5, "mission", lr_scale=50.0, max_epochs=200, stable_epochs=None, truth=d.beta)
    assert run.diverged


def test_decay_profile():
    errs = [2.0**-i for i in range(10)] + [1e-3] * 20
    prof = decay_profile(errs)
    assert prof["floor"] == pytest.approx(1e-3)
    assert prof["decay_ratio"] == pytest.approx(0.5, rel=0.05)


def test_write_result(tmp_path):
    grid = ExperimentGrid("attenuation", p=[100], n=[40], k=[1], trials=2, alphas=[1, 2], seed=3)
    res = run_attenuation(grid)
    csv_path, manifest_path = write_result(res, tmp_path / "out", elapsed=1.5)
    rows = list(csv.DictReader(open(csv_path)))
    assert len(rows) == 2 and "max_alpha_mission" in rows[0]
    man = json.loads(manifest_path.read_text())
    assert man["base_seed"] == 3 and man["parameters"]["trials"] == 2
    assert set(man["versions"]) == {"sketchsel", "numpy", "python"}
