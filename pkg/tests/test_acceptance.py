"""Acceptance suite: one test per shipped guarantee, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -s` to see every PASS/FAIL line.
These tests are intentionally heavier than the unit suites; together they
exercise exact-optimality oracles, statistical identities, an end-to-end
synthetic experiment, and a wall-clock benchmark.
"""

import math
import time

import numpy as np
import pytest

from opf_forge.classify import predict_sopf, train_sopf
from opf_forge.cluster import cluster_with_k, compute_delta
from opf_forge.dictionary import (
    Dictionary,
    LayerSchedule,
    dict_hopf,
    quantize,
    train_deep_forest,
)
from opf_forge.evaluation import (
    ExperimentConfig,
    balanced_accuracy,
    holdout_experiment,
    wilcoxon_signed_rank,
)
from opf_forge.graph import build_knn_graph
from opf_forge.rbm import RbmHyper, RbmModel, hidden_size, normalize_histograms, \
    reconstruction_mse, train_rbm, compress
from opf_forge.signals import SynthParams, generate_synthetic_cohort, haar_dwt1, haar_idwt1
from oracles import (
    balanced_accuracy_direct,
    forest_costs_exhaustive,
    knn_adjacency,
    nearest_word_counts,
    wilcoxon_enumeration,
)


def verdict(num: int, name: str, ok: bool, detail: str = "") -> None:
    tail = f" ({detail})" if detail else ""
    print(f"\n[acceptance {num:02d}] {name}: {'PASS' if ok else 'FAIL'}{tail}")
    assert ok, f"acceptance criterion {num} failed: {name}{tail}"


def test_01_forest_path_costs_are_optimal():
    rng = np.random.default_rng(20240817)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 10))
        pts = rng.normal(size=(n, 2))
        k = int(rng.integers(1, n))
        g = build_knn_graph(pts, k)
        forest = cluster_with_k(g)
        adj, _, _, _ = knn_adjacency([list(p) for p in pts], k)
        expected = forest_costs_exhaustive(
            adj, list(g.rho), forest.prototypes.tolist(), compute_delta(g)
        )
        worst = max(worst, float(np.max(np.abs(forest.cost - np.asarray(expected)))))
    elapsed = time.perf_counter() - start
    verdict(
        1, "forest path costs match exhaustive enumeration",
        worst <= 1e-12 and elapsed < 10.0,
        f"max dev {worst:.2e}, {elapsed:.1f}s",
    )


def test_02_density_hand_value():
    g = build_knn_graph(np.array([[0.0], [3.0]]), k=1)
    # two nodes, distance 3: sigma = 1, each density is N(0,1) at x=3
    dev = abs(g.rho[0] - 0.0044318)
    verdict(2, "two-node density hand value", dev <= 1e-7, f"rho={g.rho[0]:.9f}")


def test_03_layer_chain_monotone_and_nested():
    violations = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        centers = rng.normal(0, 6, (6, 3))
        data = centers[rng.integers(0, 6, 90)] + rng.normal(0, 0.7, (90, 3))
        df = train_deep_forest(data, LayerSchedule(3, 5, (0.5, 0.5)))
        sizes = df.layer_sizes
        if sizes != sorted(sizes, reverse=True):
            violations += 1
            continue
        prev = {tuple(v) for v in df.layers[0].vectors}
        for layer in df.layers[1:]:
            cur = {tuple(v) for v in layer.vectors}
            if not cur <= prev:
                violations += 1
                break
            prev = cur
    verdict(3, "layer sizes shrink and prototypes nest", violations == 0,
            f"{violations} violations over 50 seeds")


def test_04_hierarchical_dictionary_size_identity():
    ok = True
    for seed in range(10):
        rng = np.random.default_rng(seed)
        data = rng.normal(size=(70, 4))
        df = train_deep_forest(data, LayerSchedule(3, 4, (0.5, 0.5)))
        if dict_hopf(df).size != sum(df.layer_sizes):
            ok = False
    # reference four-layer size chain recorded for a large handwriting corpus
    fixture = [5682, 2584, 228, 68]
    ok = ok and sum(fixture) == 8562
    verdict(4, "hierarchical dictionary size equals layer-size sum", ok,
            f"fixture sum {sum(fixture)}")


def test_05_quantization_conserves_mass():
    rng = np.random.default_rng(5)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        w = int(rng.integers(1, 12))
        words = rng.normal(size=(w, 3))
        data = rng.normal(size=(n, 3))
        h = quantize(data, Dictionary(words=words, method="kmeans"))
        if int(h.counts.sum()) != n or np.any(h.counts < 0):
            bad += 1
    verdict(5, "quantization conserves descriptor mass", bad == 0,
            f"{bad} failures in 1000 instances")


def test_06_haar_energy_and_reconstruction():
    rng = np.random.default_rng(6)
    worst_energy = worst_rec = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 33))
        x = rng.normal(size=2 * m) * float(rng.uniform(0.1, 10))
        a, d = haar_dwt1(x)
        worst_energy = max(
            worst_energy, abs(float(np.sum(a**2) + np.sum(d**2) - np.sum(x**2)))
        )
        worst_rec = max(worst_rec, float(np.max(np.abs(haar_idwt1(a, d) - x))))
    verdict(6, "wavelet transform preserves energy and inverts",
            worst_energy <= 1e-9 and worst_rec <= 1e-9,
            f"energy dev {worst_energy:.1e}, reconstruction dev {worst_rec:.1e}")


def test_07_balanced_accuracy_identities():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        c = int(rng.integers(2, 7))
        cm = rng.integers(0, 25, (c, c)) + np.eye(c, dtype=np.int64)
        worst = max(worst, abs(balanced_accuracy(cm) - balanced_accuracy_direct(cm.tolist())))
    hand = abs(balanced_accuracy([[8, 2], [3, 7]]) - 0.75)
    majority = abs(balanced_accuracy([[90, 0], [10, 0]]) - 0.5)
    verdict(7, "balanced accuracy matches the error-term oracle",
            worst <= 1e-12 and hand <= 1e-12 and majority <= 1e-12,
            f"max dev {worst:.1e}")


def test_08_wilcoxon_exact_p_matches_enumeration():
    rng = np.random.default_rng(8)
    worst = 0.0
    checked = 0
    while checked < 200:
        n = int(rng.integers(5, 13))
        diffs = rng.integers(-9, 10, n).astype(np.float64)
        if np.count_nonzero(diffs) < 5:
            continue
        r = wilcoxon_signed_rank(diffs, np.zeros(n))
        w_exp, p_exp = wilcoxon_enumeration(list(diffs))
        worst = max(worst, abs(r.statistic - w_exp), abs(r.p_value - p_exp))
        checked += 1
    same = wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    verdict(8, "signed-rank exact p matches sign enumeration",
            worst <= 1e-12 and same.no_decision,
            f"max dev {worst:.1e} over 200 samples")


def test_09_supervised_forest_zero_training_error():
    rng = np.random.default_rng(9)
    errors = 0
    done = 0
    while done < 100:
        n = int(rng.integers(4, 25))
        x = rng.normal(size=(n, 3))
        y = list(rng.integers(0, 3, size=n))
        if len(set(y)) < 2:
            continue
        m = train_sopf(x, y)
        for xi, yi in zip(x, y):
            if predict_sopf(m, xi)[0] != yi:
                errors += 1
        done += 1
    verdict(9, "supervised forest has zero training error", errors == 0,
            f"{errors} training errors over 100 sets")


def test_10_rbm_learns_and_respects_ratio():
    rng = np.random.default_rng(10)
    a = rng.poisson([25, 25, 2, 2] * 10, (100, 40))
    b = rng.poisson([2, 2, 25, 25] * 10, (100, 40))
    hists = np.concatenate([a, b]).astype(np.float64)
    v = normalize_histograms(hists)
    dims_ok = True
    mse_ok = True
    for ratio in (0.25, 0.5, 0.75):
        h = hidden_size(40, ratio)
        if h != int(math.floor(ratio * 40 + 0.5)):
            dims_ok = False
        init = RbmModel(
            weights=np.random.default_rng(0).normal(0.0, 0.01, (40, h)),
            b_vis=np.zeros(40), b_hid=np.zeros(h), ratio=ratio, hyper=RbmHyper(),
        )
        trained = train_rbm(hists, ratio, RbmHyper(epochs=20, seed=0))
        if reconstruction_mse(trained, v) >= reconstruction_mse(init, v):
            mse_ok = False
        if compress(trained, v).shape != (200, h):
            dims_ok = False
    verdict(10, "compressor reduces reconstruction error at all three ratios",
            dims_ok and mse_ok)


def test_11_end_to_end_synthetic_cohort():
    start = time.perf_counter()
    signals = generate_synthetic_cohort(SynthParams())  # 20 subjects, separable setting
    config = ExperimentConfig(dict_method="hopf", classifier="sopf")
    real = holdout_experiment(signals, config, n_runs=15, seed=0)
    from dataclasses import replace

    control = holdout_experiment(
        signals, replace(config, shuffle_labels=True), n_runs=15, seed=0
    )
    elapsed = time.perf_counter() - start
    ok = real.mean >= 0.90 and real.mean - control.mean >= 0.30 and elapsed < 120.0
    verdict(11, "end-to-end hold-out separates the synthetic cohort", ok,
            f"mean {real.mean:.3f}, control {control.mean:.3f}, {elapsed:.1f}s")


def test_12_dictionary_learning_speed_order():
    from opf_forge.bench import BenchConfig, bench_dictionaries

    rng = np.random.default_rng(12)
    centers = rng.normal(0, 5, (50, 16))
    data = centers[rng.integers(0, 50, 10000)] + rng.normal(0, 1, (10000, 16))
    entries = bench_dictionaries(data, [
        BenchConfig(method="dopf", schedule=LayerSchedule(4, 100, (0.01, 0.1, 0.1))),
        BenchConfig(method="kmeans"),
        BenchConfig(method="opf", kmax=1500),
    ])
    by_method = {e.method: e.seconds for e in entries}
    ok = by_method["dopf"] < by_method["opf"] and by_method["kmeans"] == min(by_method.values())
    verdict(12, "deep dictionary beats flat search; centroids are fastest", ok,
            ", ".join(f"{e.method}={e.seconds:.2f}s/{e.n_words}w" for e in entries))


def test_13_pipeline_determinism(tmp_path):
    from opf_forge.cli import main

    outs = []
    for tag in ("first", "second"):
        d = tmp_path / tag
        d.mkdir()
        steps = [
            ["synth", "--subjects", "3", "--duration", "1.0", "--seed", "4",
             "--out", str(d / "signals")],
            ["extract", "--signals", str(d / "signals"), "--out", str(d / "desc.csv")],
            ["dict", "--descriptors", str(d / "desc.csv"), "--method", "hopf",
             "--schedule", "3,0.5", "--out", str(d / "dict.json")],
            ["quantize", "--descriptors", str(d / "desc.csv"),
             "--dictionary", str(d / "dict.json"), "--out", str(d / "hist.json")],
            ["compress", "--histograms", str(d / "hist.json"), "--ratio", "0.5",
             "--epochs", "3", "--out", str(d / "rbm.json")],
            ["train", "--histograms", str(d / "hist.json"), "--classifier", "sopf",
             "--out", str(d / "model.json")],
            ["predict", "--model", str(d / "model.json"),
             "--histograms", str(d / "hist.json"), "--out", str(d / "preds.json")],
            ["eval", "--signals", str(d / "signals"), "--dict-method", "hopf",
             "--n-runs", "2", "--out", str(d / "report.json")],
        ]
        for argv in steps:
            assert main(argv) == 0, f"step failed: {argv[0]}"
        artifacts = {
            p.relative_to(d): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()
        }
        outs.append(artifacts)
    ok = outs[0].keys() == outs[1].keys() and all(
        outs[0][k] == outs[1][k] for k in outs[0]
    )
    verdict(13, "repeated pipeline runs are byte-identical", ok,
            f"{len(outs[0])} artifacts compared")
