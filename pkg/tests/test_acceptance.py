"""End-to-end acceptance checks, one test per shipped guarantee.

 1. Holm step-down statistics on a pinned ten-algorithm rank fixture
    match the expected z values to six decimals and the expected
    reject/not-reject decisions.
 2. Friedman chi-square closed forms: a strict-order table gives
    chi-square 8 with p = e^-4; an all-ties table gives 0 and 1.
 3. Every block update of the alternating solver lands on a stationary
    point of the full objective (finite-difference check).
 4. With similarity graphs frozen, the objective never increases
    across sweeps.
 5. Simplex and zero-row constraints hold after every iteration.
 6. Sparse similarity graphs equal dense brute-force constructions.
 7. Transductive accuracy on synthetic blobs tracks a supervised ridge
    oracle and degrades gracefully when half the views are missing.
 8. On the dermatology table, disabling either structural term lowers
    mean accuracy (skipped when the data file is absent).
 9. Per-iteration wall time scales roughly quadratically with the
    instance count.
10. Identical configuration and seed reproduce the objective trace and
    every output CSV byte-for-byte.

Each test prints a one-line verdict; run ``pytest -s`` to see them all.
"""

import math
import time

import numpy as np
import pytest
import yaml

from conftest import (
    brute_force_instance_graph,
    brute_force_label_graph,
    central_difference,
    make_blob_problem,
    reference_objective_total,
)
from mvtsk.cli import main as cli_main
from mvtsk.data import MaskSpec, SplitSpec, generate_mask, generate_split, save_dataset_csv
from mvtsk.datasets import (
    find_dermatology_file,
    load_dermatology,
    make_synthetic_blobs,
)
from mvtsk.graphs import build_graphs
from mvtsk.solver import (
    Hyperparams,
    Trainer,
    fit,
    transductive_accuracy,
    write_trace_csv,
)
from mvtsk.stats import TrialMatrix, friedman_holm, holm_test


def _line(num, name, verdict, detail=""):
    text = f"[criterion {num:2d}] {name}: {verdict}"
    if detail:
        text += f" ({detail})"
    print(text)


def _toy(seed):
    """Three-view, twelve-instance, two-class problem with 30% missing
    rows per view and half the instances labeled."""
    ds = make_synthetic_blobs(
        12, n_views=3, n_classes=2, dim_per_view=3, separation=2.0, seed=seed
    )
    ds = generate_mask(ds, MaskSpec([0.3, 0.3, 0.3], seed=seed + 1))
    return generate_split(ds, SplitSpec(0.5, seed=seed + 2))


# -- 1: Holm step-down on the pinned rank fixture ----------------------

# Average ranks of ten algorithms over eight datasets (1 = best, the
# control), with the expected z statistics in descending order and the
# step-down decisions they imply at alpha = 0.05.
TEN_ALG_RANKS = [1.0, 3.375, 4.25, 4.875, 5.75, 6.125, 6.125, 7.375, 7.375, 8.75]
TEN_ALG_Z_DESC = [
    5.119482,
    4.211186,
    4.211186,
    3.385464,
    3.385464,
    3.137747,
    2.559741,
    2.146879,
    1.568873,
]
TEN_ALG_REJECT_DESC = [True] * 7 + [False] * 2


def test_criterion_01_holm_step_down_matches_pinned_fixture():
    rows = holm_test(TEN_ALG_RANKS, n_datasets=8, alpha=0.05)
    assert len(rows) == 9
    for row, z, reject in zip(rows, TEN_ALG_Z_DESC, TEN_ALG_REJECT_DESC):
        assert abs(row.z - z) <= 5e-7, f"z {row.z!r} != {z} for {row.algorithm}"
        assert row.threshold == 0.05 / row.index
        assert row.reject == reject, f"decision flipped for {row.algorithm}"
    _line(1, "holm step-down fixture", "PASS", "nine z values match to 6 decimals")


# -- 2: Friedman chi-square closed forms -------------------------------


def test_criterion_02_friedman_statistic_closed_forms():
    datasets = [f"d{j}" for j in range(4)]
    strict = TrialMatrix(
        algorithms=["first", "second", "third"],
        datasets=datasets,
        values=np.array([[0.9] * 4, [0.8] * 4, [0.7] * 4]),
    )
    report = friedman_holm(strict)
    assert report.chi_square == pytest.approx(8.0, abs=1e-12)
    assert report.degrees_of_freedom == 2
    assert report.p_value == pytest.approx(math.exp(-4.0), abs=1e-6)

    ties = TrialMatrix(
        algorithms=["first", "second", "third"],
        datasets=datasets,
        values=np.full((3, 4), 0.5),
    )
    tied = friedman_holm(ties)
    assert tied.chi_square == 0.0
    assert tied.p_value == 1.0
    _line(2, "friedman closed forms", "PASS", "chi2=8 with p=e^-4; ties give 0 and 1")


# -- 3: block updates are stationary points ----------------------------


def _fd_view_weights(tr):
    base = tr.a.copy()

    def j_of(vec):
        tr.a = vec
        return reference_objective_total(tr)

    try:
        return central_difference(j_of, base)
    finally:
        tr.a = base


def _fd_consequents(tr, v):
    base = tr.P[v].copy()
    shape = base.shape

    def j_of(vec):
        tr.P[v] = vec.reshape(shape)
        return reference_objective_total(tr)

    try:
        return central_difference(j_of, base.ravel())
    finally:
        tr.P[v] = base


def _fd_error_row(tr, v, i):
    base = tr.H[v][i].copy()

    def j_of(vec):
        tr.H[v][i] = vec
        return reference_objective_total(tr)

    try:
        return central_difference(j_of, base)
    finally:
        tr.H[v][i] = base


def _pseudo_row_kkt_residual(tr, row):
    """Violation of the simplex optimality conditions at pseudo-label
    ``row``: the gradient must be constant on the support and no smaller
    off it."""
    base = tr.ytilde[row].copy()

    def j_of(vec):
        tr.ytilde[row] = vec
        return reference_objective_total(tr)

    try:
        grad = central_difference(j_of, base)
    finally:
        tr.ytilde[row] = base
    support = base > 1e-12
    mu = grad[support].mean()
    residual = np.abs(grad[support] - mu).max()
    if not support.all():
        residual = max(residual, float((mu - grad[~support]).max()))
    return residual


def test_criterion_03_block_updates_are_stationary_points():
    t0 = time.perf_counter()
    worst = {"view weights": 0.0, "consequents": 0.0, "error rows": 0.0, "pseudo labels": 0.0}
    # With the cross-view alignment active the view-weight step is a
    # damped line search, checked by descent; with it off the step is
    # the exact softmax minimizer, checked by finite differences.
    for beta5 in (1.0, 0.0):
        for seed in range(10):
            tr = Trainer(_toy(seed), Hyperparams(beta5=beta5, n_rules=2, seed=seed + 3))
            tr.rebuild_graphs()
            tr.sweep(rebuild=False)
            tr.sweep(rebuild=True)
            tr.rebuild_graphs()
            scale = 1.0 + abs(reference_objective_total(tr))
            tol = 1e-5 * scale
            for v in range(tr.n_views):
                j_before = reference_objective_total(tr)
                tr.update_view_weights()
                if tr.theta_enabled:
                    assert reference_objective_total(tr) <= j_before + 1e-9 * scale
                else:
                    grad = _fd_view_weights(tr)
                    res = np.abs(grad - grad.mean()).max()
                    worst["view weights"] = max(worst["view weights"], res / scale)
                    assert res <= tol
                tr.update_consequents(v)
                res = np.abs(_fd_consequents(tr, v)).max()
                worst["consequents"] = max(worst["consequents"], res / scale)
                assert res <= tol
                for i in tr.miss_rows[v]:
                    tr.update_error_rows(v, rows=np.array([i]))
                    res = np.abs(_fd_error_row(tr, v, i)).max()
                    worst["error rows"] = max(worst["error rows"], res / scale)
                    assert res <= tol
            for row in tr.ds.unlabeled_idx:
                local = np.flatnonzero(tr.ds.unlabeled_idx == row)
                tr.update_pseudo_labels(rows=local)
                res = _pseudo_row_kkt_residual(tr, row)
                worst["pseudo labels"] = max(worst["pseudo labels"], res / scale)
                assert res <= tol
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    _line(3, "block stationarity", "PASS", f"worst normalized residuals: {detail}; {elapsed:.1f}s")


# -- 4: monotone objective under frozen graphs -------------------------


def test_criterion_04_objective_monotone_under_frozen_graphs():
    worst = -np.inf
    for seed in range(10):
        model = fit(
            _toy(seed),
            Hyperparams(n_rules=2, iterations=50, tolerance=0.0, seed=seed),
            freeze_graphs=True,
        )
        j = model.trace[:, 4]
        assert j.size == 51
        slack = 1e-8 * np.maximum(1.0, np.abs(j[:-1]))
        rises = j[1:] - j[:-1]
        worst = max(worst, float((rises / np.maximum(1.0, np.abs(j[:-1]))).max()))
        assert np.all(rises <= slack), f"objective rose at seed {seed}"
    _line(4, "frozen-graph monotonicity", "PASS", f"50 sweeps x 10 seeds, worst relative rise {worst:.1e}")


# -- 5: constraints hold after every iteration -------------------------


def test_criterion_05_constraints_hold_every_iteration():
    iterations = 12
    for seed in range(5):
        ds = _toy(seed)
        seen = []

        def watch(tr, terms):
            assert abs(tr.a.sum() - 1.0) <= 1e-12
            assert tr.a.min() >= -1e-12
            unlabeled = tr.ytilde[tr.ds.unlabeled_idx]
            assert np.abs(unlabeled.sum(axis=1) - 1.0).max() <= 1e-12
            assert unlabeled.min() >= -1e-12
            for v in range(tr.n_views):
                observed = tr.ds.mask[:, v]
                assert np.all(tr.H[v][observed] == 0.0)
            seen.append(terms.total)

        fit(ds, Hyperparams(n_rules=2, iterations=iterations, tolerance=0.0, seed=seed), callback=watch)
        assert len(seen) == iterations
    _line(5, "per-iteration constraints", "PASS", "weights and pseudo-labels on the simplex to 1e-12; observed error rows exactly zero")


# -- 6: sparse graphs equal dense brute force --------------------------


def _graph_state(n, n_views, n_classes, seed):
    rng = np.random.default_rng(seed)
    views = [rng.normal(size=(n, 3)) for _ in range(n_views)]
    mask = rng.random((n, n_views)) > 0.25
    mask[~mask.any(axis=1), 0] = True
    labeled = rng.random(n) > 0.5
    labels = np.where(labeled, rng.integers(0, n_classes, size=n), -1)
    y = rng.random((n, n_classes))
    y /= y.sum(axis=1, keepdims=True)
    y[labeled] = np.eye(n_classes)[labels[labeled]]
    unlabeled_idx = np.flatnonzero(~labeled).astype(np.int64)
    return views, mask, y, labeled, labels, unlabeled_idx


def test_criterion_06_sparse_graphs_match_dense_brute_force():
    cases = [(9, 2, 2, 11, 3), (18, 3, 3, 7, 4), (30, 2, 3, 5, 4)]
    for n, n_views, n_classes, seed, k in cases:
        views, mask, y, labeled, labels, unl = _graph_state(n, n_views, n_classes, seed)
        assert unl.size >= 2
        g = build_graphs(views, mask, y, labeled, labels, unl, k)
        for v in range(n_views):
            np.testing.assert_allclose(
                g.s_all[v].toarray(),
                brute_force_instance_graph(views[v], mask[:, v], min(k, n - 1)),
                atol=1e-12,
            )
            np.testing.assert_allclose(
                g.s_unl[v].toarray(),
                brute_force_instance_graph(views[v][unl], mask[unl, v], min(k, unl.size - 1)),
                atol=1e-12,
            )
        np.testing.assert_allclose(
            g.z.toarray(),
            brute_force_label_graph(y, labeled, labels, min(k, n - 1)),
            atol=1e-12,
        )
    _line(6, "graph brute-force oracle", "PASS", "instance, unlabeled-subset, and label graphs match entrywise")


# -- 7: synthetic recovery tracks a ridge oracle -----------------------


def _ridge_oracle(ds, lam=1.0):
    """Multinomial ridge regression on the labeled rows of the
    concatenated views; returns accuracy on the unlabeled rows."""
    x = np.hstack([np.ones((ds.n_instances, 1))] + list(ds.views))
    labeled, unlabeled = ds.labeled_idx, ds.unlabeled_idx
    onehot = np.zeros((labeled.size, ds.n_classes))
    onehot[np.arange(labeled.size), ds.labels[labeled]] = 1.0
    xl = x[labeled]
    w = np.linalg.solve(lam * np.eye(x.shape[1]) + xl.T @ xl, xl.T @ onehot)
    predictions = np.argmax(x[unlabeled] @ w, axis=1)
    return float(np.mean(predictions == ds.labels[unlabeled]))


def test_criterion_07_synthetic_recovery_tracks_ridge_oracle():
    t0 = time.perf_counter()
    hp = Hyperparams(n_rules=4, k_neighbors=10, iterations=30, tolerance=1e-6, seed=0)
    complete_acc, missing_acc, oracle_acc = [], [], []
    for s in range(10):
        complete = make_blob_problem(200, 0.0, 0.3, data_seed=s, split_seed=2000 + s)
        masked = make_blob_problem(
            200, 0.5, 0.3, data_seed=s, mask_seed=1000 + s, split_seed=2000 + s
        )
        oracle_acc.append(_ridge_oracle(complete))
        complete_acc.append(transductive_accuracy(fit(complete, hp), complete.labels))
        missing_acc.append(transductive_accuracy(fit(masked, hp), masked.labels))
    elapsed = time.perf_counter() - t0
    mean_complete = float(np.mean(complete_acc))
    mean_missing = float(np.mean(missing_acc))
    mean_oracle = float(np.mean(oracle_acc))
    assert mean_complete >= mean_oracle - 0.05, (
        f"complete-data accuracy {mean_complete:.4f} trails oracle {mean_oracle:.4f}"
    )
    assert mean_complete - mean_missing <= 0.10, (
        f"50% missing dropped accuracy from {mean_complete:.4f} to {mean_missing:.4f}"
    )
    assert elapsed < 120.0
    _line(
        7,
        "synthetic recovery",
        "PASS",
        f"oracle {mean_oracle:.3f}, complete {mean_complete:.3f}, half-missing {mean_missing:.3f}; {elapsed:.0f}s",
    )


# -- 8: structural terms help on the dermatology table -----------------


def test_criterion_08_ablations_lower_dermatology_accuracy():
    path = find_dermatology_file()
    if path is None:
        _line(
            8,
            "dermatology ablations",
            "SKIP",
            "needs the dermatology data file; this environment has no network access -- "
            "place it at data/dermatology.data or point MVTSK_DERMATOLOGY at it",
        )
        pytest.skip("dermatology data file not available (offline environment)")
    base = load_dermatology(path)
    t0 = time.perf_counter()
    accs = {"full": [], "no_theta": [], "no_delta": []}
    for seed in range(20):
        ds = generate_mask(base, MaskSpec([0.5, 0.5], seed=seed))
        ds = generate_split(ds, SplitSpec(0.3, seed=1000 + seed))
        for ablation in accs:
            hp = Hyperparams(
                n_rules=4, k_neighbors=7, iterations=30, seed=seed, ablation=ablation
            )
            accs[ablation].append(transductive_accuracy(fit(ds, hp), ds.labels))
    elapsed = time.perf_counter() - t0
    means = {name: float(np.mean(values)) for name, values in accs.items()}
    assert means["full"] > means["no_theta"]
    assert means["full"] > means["no_delta"]
    # Expected mean accuracy for the full model under this protocol.
    assert abs(means["full"] - 0.9412) <= 0.05
    assert elapsed < 600.0
    _line(
        8,
        "dermatology ablations",
        "PASS",
        f"full {means['full']:.4f} > no_theta {means['no_theta']:.4f}, no_delta {means['no_delta']:.4f}",
    )


# -- 9: per-iteration time scales quadratically ------------------------


def _median_sweep_seconds(n, repeats=5, group=3):
    ds = make_synthetic_blobs(
        n, n_views=2, n_classes=3, dim_per_view=16, separation=3.0, seed=0
    )
    ds = generate_mask(ds, MaskSpec([0.5, 0.5], seed=1))
    ds = generate_split(ds, SplitSpec(0.3, seed=2))
    tr = Trainer(ds, Hyperparams(n_rules=4, k_neighbors=10, tolerance=0.0, seed=0))
    tr.rebuild_graphs()
    tr.sweep(rebuild=True)  # warmup
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(group):
            tr.sweep(rebuild=True)
        times.append((time.perf_counter() - t0) / group)
    times.sort()
    return times[len(times) // 2]


def test_criterion_09_per_iteration_time_scales_quadratically():
    sizes = (200, 400, 800)
    band = (2.5, 6.0)
    ratios = []
    # One re-measurement absorbs scheduler noise on a loaded machine.
    for attempt in range(2):
        times = [_median_sweep_seconds(n) for n in sizes]
        ratios = [times[i + 1] / times[i] for i in range(len(sizes) - 1)]
        if all(band[0] <= r <= band[1] for r in ratios):
            break
    assert all(band[0] <= r <= band[1] for r in ratios), (
        f"per-doubling time ratios {ratios} outside {band}"
    )
    detail = ", ".join(
        f"{a}->{b}: x{r:.2f}" for (a, b), r in zip(zip(sizes, sizes[1:]), ratios)
    )
    _line(9, "quadratic time scaling", "PASS", detail)


# -- 10: byte-for-byte reproducibility ---------------------------------


def test_criterion_10_identical_seeds_reproduce_outputs_bytewise(tmp_path):
    # The training trace from the fitting API.
    ds = make_blob_problem(60, 0.3, 0.4)
    hp = Hyperparams(n_rules=3, iterations=8, tolerance=0.0, seed=9)
    first, second = fit(ds, hp), fit(ds, hp)
    np.testing.assert_array_equal(first.trace, second.trace)
    write_trace_csv(first, tmp_path / "trace1.csv")
    write_trace_csv(second, tmp_path / "trace2.csv")
    assert (tmp_path / "trace1.csv").read_bytes() == (tmp_path / "trace2.csv").read_bytes()

    # Every CSV the experiment harness writes.
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    save_dataset_csv(
        make_synthetic_blobs(24, n_views=2, n_classes=3, dim_per_view=4, seed=0),
        data_dir,
    )
    config = {
        "dataset": {
            "views": [str(data_dir / "view0.csv"), str(data_dir / "view1.csv")],
            "labels": str(data_dir / "labels.csv"),
        },
        "protocol": {
            "missing_rates": [0.3],
            "labeled_rates": [0.5],
            "repeats": 2,
            "base_seed": 0,
            "ablations": ["full"],
        },
        "model": {"n_rules": 2, "iterations": 2, "tolerance": 0.0, "k_neighbors": 3},
        "output": {"dir": str(tmp_path / "out1")},
    }
    config_path = tmp_path / "config.yaml"
    config_path.write_text(yaml.safe_dump(config))
    assert cli_main(["run", "--config", str(config_path)]) == 0
    assert cli_main(["run", "--config", str(config_path), "--out-dir", str(tmp_path / "out2")]) == 0
    names = ["trials.csv", "summary.csv", "curve_missing_rate.csv", "curve_labeled_rate.csv"]
    for name in names:
        first_bytes = (tmp_path / "out1" / name).read_bytes()
        assert first_bytes == (tmp_path / "out2" / name).read_bytes(), f"{name} differs"
        assert first_bytes, f"{name} is empty"
    _line(10, "bytewise determinism", "PASS", "trace and all harness CSVs identical across reruns")
