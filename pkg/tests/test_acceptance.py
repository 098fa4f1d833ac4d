"""Acceptance suite: one test per criterion, each printing a pass/fail
line with its measured quantities. Run with -s to see the lines."""

import math
import time

import numpy as np
import pytest

from gazesal import evaluation, io
from gazesal.cli import main as cli_main
from gazesal.fixmaps import SalienceGrid, fixation_density, kld, Fixation
from gazesal.pairwise import (FitConfig, GlobalSalienceModel, encode_trial,
                              fit, gradient, objective, rows_to_dense)
from gazesal.prf import (FeatureMap, PRFVoxel, correlation_matrix,
                         filter_voxels, identify, kendall_tau,
                         predict_profile)

from conftest import sample_theta, sample_trials
from test_evaluation import brute_force_auc
from test_pairwise import central_differences
from test_prf import brute_force_tau


def report(name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


def test_criterion_1_gradient_fidelity():
    M, K, N = 15, 4, 200
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        theta_true = sample_theta(M, K, rng)
        trials, _ = sample_trials(theta_true, M, K, N, rng)
        X, y = rows_to_dense([encode_trial(t, M, K) for t in trials], M, K)
        theta = rng.standard_normal(M + 2 + K)
        g = gradient(theta, X, y, 1.0)
        fd = central_differences(theta, X, y, 1.0, step=1e-5)
        rel = np.abs(g - fd) / np.maximum(np.abs(fd), 1.0)
        worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    report("gradient fidelity", worst < 1e-6 and elapsed < 5.0,
           f"max relative error {worst:.3e}, {elapsed:.2f} s")


def test_criterion_2_synthetic_btl_recovery():
    M, K, N = 20, 5, 5000
    rng = np.random.default_rng(202)
    theta_star = sample_theta(M, K, rng)
    start = time.perf_counter()
    trials, _ = sample_trials(theta_star, M, K, N, rng, with_nuisance=False)
    heldout, bayes = sample_trials(theta_star, M, K, 2000, rng,
                                   with_nuisance=False)
    rows = [encode_trial(t, M, K) for t in trials]
    model = fit(rows, M, K, FitConfig(C=1.0, tol=1e-8, max_iter=10000))
    tau = kendall_tau(model.w, theta_star[:M])
    acc = evaluation.accuracy(model, heldout)
    elapsed = time.perf_counter() - start
    ok = tau >= 0.9 and abs(acc - bayes) <= 0.03 and elapsed < 30.0
    report("synthetic BTL recovery", ok,
           f"kendall tau {tau:.3f}, held-out accuracy {acc:.4f} vs Bayes rate "
           f"{bayes:.4f}, {elapsed:.1f} s")


def test_criterion_3_metric_oracles():
    rng = np.random.default_rng(303)
    start = time.perf_counter()
    auc_ok = tau_ok = True
    for _ in range(100):
        n = int(rng.integers(5, 301))
        scores = rng.choice(np.linspace(0, 1, 13), size=n)  # ties injected
        labels = rng.choice([-1, 1], size=n)
        if len(set(labels)) < 2:
            labels[0] = -labels[1]
        auc_ok &= evaluation.auc(scores, labels) == brute_force_auc(scores, labels)
    for _ in range(100):
        n = int(rng.integers(3, 301))
        a = rng.choice(np.arange(9), size=n).astype(float)
        b = rng.choice(np.arange(9), size=n).astype(float)
        tau_ok &= kendall_tau(a, b) == brute_force_tau(a, b)
    elapsed = time.perf_counter() - start
    report("metric oracles", auc_ok and tau_ok and elapsed < 10.0,
           f"AUC exact: {auc_ok}, Kendall exact: {tau_ok}, {elapsed:.2f} s")


def test_criterion_4_kld_properties():
    rng = np.random.default_rng(404)
    self_ok = lower_ok = sums_ok = True
    for _ in range(50):
        shape = (int(rng.integers(4, 30)), int(rng.integers(4, 30)))
        F = SalienceGrid(rng.random(shape)).normalized()
        S = SalienceGrid(rng.random(shape)).normalized()
        self_ok &= kld(F, F, eps=1e-12) <= 1e-6
        lower_ok &= kld(F, S, eps=1e-12) >= -1e-6
        fixations = [Fixation(0, 0, float(rng.uniform(0, shape[1])),
                              float(rng.uniform(0, shape[0])), 200.0, 150.0, 1)
                     for _ in range(int(rng.integers(1, 20)))]
        dens = fixation_density(fixations, shape[1], shape[0])
        sums_ok &= abs(dens.values.sum() - 1.0) <= 1e-12
    report("KLD properties", self_ok and lower_ok and sums_ok,
           f"self-KLD <= 1e-6: {self_ok}, lower bound: {lower_ok}, "
           f"density sums: {sums_ok}")


def test_criterion_5_prf_closure():
    rng = np.random.default_rng(505)
    start = time.perf_counter()
    n_maps, n_voxels, n_px = 45, 500, 64
    maps = [FeatureMap(rng.random((n_px, n_px))).normalized()
            for _ in range(n_maps)]
    raw = []
    while len(raw) < n_voxels:
        x, y = rng.uniform(-5.0, 5.0, size=2)
        raw.append(PRFVoxel(x_c=float(x), y_c=float(y),
                            sigma=float(rng.uniform(0.4, 2.0)),
                            t_value=float(rng.uniform(0.5, 5.0)),
                            variance_explained=float(rng.uniform(0.56, 0.99))))
    voxels = filter_voxels(raw)
    predicted = np.vstack([predict_profile(m, voxels) for m in maps])

    acc0, _ = identify(correlation_matrix(predicted, predicted))
    sd = predicted.std()
    mean_accs = []
    for eta in (0.0, 0.1, 0.5, 1.0):
        vals = []
        for seed in range(20):
            noise = np.random.default_rng(seed).standard_normal(predicted.shape)
            measured = predicted + eta * sd * noise
            a, _ = identify(correlation_matrix(measured, predicted))
            vals.append(a)
        mean_accs.append(float(np.mean(vals)))
    elapsed = time.perf_counter() - start
    monotone = all(mean_accs[i] >= mean_accs[i + 1] for i in range(3))
    ok = acc0 == 1.0 and monotone and elapsed < 60.0
    report("pRF closure", ok,
           f"noiseless accuracy {acc0}, accuracies by noise level {mean_accs}, "
           f"{elapsed:.1f} s")


def test_criterion_6_convex_determinism():
    rng = np.random.default_rng(606)
    M, K = 10, 3
    theta = sample_theta(M, K, rng)
    trials, _ = sample_trials(theta, M, K, 800, rng)
    rows = [encode_trial(t, M, K) for t in trials]
    m1 = fit(rows, M, K, FitConfig(C=1.0))
    m2 = fit(rows, M, K, FitConfig(C=1.0))
    bit_identical = np.array_equal(m1.theta, m2.theta)
    m3 = fit(rows, M, K, FitConfig(C=1.0), verbose=False)
    close = abs(m3.final_objective - m1.final_objective) < 1e-6
    report("convex determinism", bit_identical and close,
           f"bit-identical: {bit_identical}, objective delta "
           f"{abs(m3.final_objective - m1.final_objective):.2e}")


def test_criterion_7_format_round_trips(tmp_path):
    from gazesal.pairwise import Outcome, Side, Trial

    rng = np.random.default_rng(707)
    sides = list(Side)
    outcomes = list(Outcome)
    ok = True
    for i in range(50):
        trials = []
        for _ in range(int(rng.integers(1, 15))):
            a, b = rng.choice(50, size=2, replace=False)
            trials.append(Trial(int(rng.integers(10)), int(a), int(b),
                                sides[rng.integers(3)], sides[rng.integers(3)],
                                outcomes[rng.integers(2)]))
        p = tmp_path / f"t{i}.csv"
        io.save_trials(trials, p)
        first = p.read_bytes()
        io.save_trials(io.load_trials(p), p)
        ok &= p.read_bytes() == first

        voxels = [PRFVoxel(x_c=float(rng.standard_normal()),
                           y_c=float(rng.standard_normal()),
                           sigma=float(rng.uniform(0.1, 3)),
                           t_value=float(rng.standard_normal()),
                           variance_explained=float(rng.uniform(0, 1)))
                  for _ in range(int(rng.integers(1, 10)))]
        p = tmp_path / f"v{i}.csv"
        io.save_voxels(voxels, p)
        first = p.read_bytes()
        io.save_voxels(io.load_voxels(p), p)
        ok &= p.read_bytes() == first

        grid = SalienceGrid(rng.random((int(rng.integers(1, 12)),
                                        int(rng.integers(1, 12)))),
                            deg_per_bin=float(rng.uniform(0.1, 2)))
        p = tmp_path / f"g{i}.txt"
        io.save_grid(grid, p)
        first = p.read_bytes()
        io.save_grid(io.load_grid(p), p)
        ok &= p.read_bytes() == first

        M, K = int(rng.integers(1, 20)), int(rng.integers(1, 8))
        model = GlobalSalienceModel(
            w=rng.standard_normal(M), tau=float(rng.standard_normal()),
            phi=float(rng.standard_normal()), s=rng.standard_normal(K),
            M=M, K=K, C=float(rng.uniform(0.01, 10)))
        p = tmp_path / f"m{i}.txt"
        io.save_model(model, p)
        first = p.read_bytes()
        io.save_model(io.load_model(p), p)
        ok &= p.read_bytes() == first
    report("format round-trips", ok, "50 randomized instances, 4 formats")


def test_criterion_8_end_to_end_cli(tmp_path):
    rng = np.random.default_rng(808)
    start = time.perf_counter()

    # synthesize behavioural and imaging data
    M, K = 10, 6
    theta = sample_theta(M, K, rng)
    trials, _ = sample_trials(theta, M, K, 900, rng)
    trials_path = tmp_path / "trials.csv"
    io.save_trials(trials, trials_path)

    n_maps, n_px = 8, 40
    maps_dir = tmp_path / "maps"
    maps_dir.mkdir()
    maps = []
    for i in range(n_maps):
        grid = SalienceGrid(rng.random((n_px, n_px)), deg_per_bin=11.0 / n_px)
        io.save_grid(grid, maps_dir / f"img_{i:03d}.txt")
        maps.append(FeatureMap(grid.values).normalized())
    voxels = []
    while len(voxels) < 50:
        x, y = rng.uniform(-4.5, 4.5, size=2)
        if 0.5 <= math.hypot(x, y) <= 4.5:
            voxels.append(PRFVoxel(x_c=float(x), y_c=float(y),
                                   sigma=float(rng.uniform(0.5, 2)),
                                   t_value=2.0, variance_explained=0.8,
                                   area="V1"))
    vox_path = tmp_path / "voxels.csv"
    io.save_voxels(voxels, vox_path)
    predicted = np.vstack([predict_profile(m, voxels) for m in maps])
    noisy = predicted + 0.1 * predicted.std() * rng.standard_normal(predicted.shape)
    measured_path = tmp_path / "measured.csv"
    io.save_responses(list(range(n_maps)), noisy, measured_path)

    model_path = tmp_path / "model.txt"
    steps = [
        ["fit", "--trials", str(trials_path), "--c", "1.0", "--tol", "1e-6",
         "--out", str(model_path)],
        ["cv", "--trials", str(trials_path), "--folds", "3",
         "--grid", "0.1,1.0", "--tol", "1e-4",
         "--out", str(tmp_path / "cv.csv")],
        ["eval", "--trials", str(trials_path), "--folds", "3", "--c", "1.0",
         "--tol", "1e-5", "--out", str(tmp_path / "eval.csv"),
         "--figure", str(tmp_path / "eval.png")],
        ["identify", "--measured", str(measured_path), "--voxels",
         str(vox_path), "--maps", str(maps_dir), "--area", "V1",
         "--out-prefix", str(tmp_path / "ident"),
         "--figure", str(tmp_path / "corr.png")],
        ["rsa", "--measured", str(measured_path), "--voxels", str(vox_path),
         "--maps", str(maps_dir), "--area", "V1"],
    ]
    codes = [cli_main(argv) for argv in steps]
    artifacts = [model_path, tmp_path / "cv.csv", tmp_path / "eval.csv",
                 tmp_path / "eval.png", tmp_path / "ident_corr.csv",
                 tmp_path / "ident_confidence.csv", tmp_path / "corr.png"]
    missing = [a.name for a in artifacts if not a.exists()]
    elapsed = time.perf_counter() - start
    ok = all(c == 0 for c in codes) and not missing and elapsed < 120.0
    report("end-to-end CLI", ok,
           f"exit codes {codes}, missing artifacts {missing}, {elapsed:.1f} s")
