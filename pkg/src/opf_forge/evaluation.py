"""Experimental protocol: seeded hold-out runs, unbalance-aware accuracy, Wilcoxon test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import classify, rbm as rbm_mod
from .cluster import kmeans_cluster
from .dictionary import (
    LayerSchedule,
    dict_dopf,
    dict_flat_opf,
    dict_hopf,
    quantize,
    train_deep_forest,
)
from .signals import MultiChannelSignal, descriptor_matrix, extract_descriptors


def confusion_matrix(true_idx, pred_idx, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(true_idx, pred_idx):
        cm[t, p] += 1
    return cm


def balanced_accuracy(cm: np.ndarray) -> float:
    """Unbalance-aware accuracy built from per-class FP/FN error terms.

    Acc = 1 - sum_i(e_i1 + e_i2) / (2c) with e_i1 = FP_i / (|Z| - |Z_i|)
    and e_i2 = FN_i / |Z_i|.
    """
    cm = np.asarray(cm, dtype=np.int64)
    c = cm.shape[0]
    if cm.ndim != 2 or cm.shape[1] != c or c < 2:
        raise ValueError(f"need a square confusion matrix with c >= 2, got shape {cm.shape}")
    total = int(cm.sum())
    class_sizes = cm.sum(axis=1)
    if (class_sizes == 0).any():
        empty = np.flatnonzero(class_sizes == 0).tolist()
        raise ValueError(f"classes {empty} have no true samples")
    err = 0.0
    for i in range(c):
        fp = int(cm[:, i].sum() - cm[i, i])
        fn = int(class_sizes[i] - cm[i, i])
        err += fp / (total - class_sizes[i]) + fn / class_sizes[i]
    return 1.0 - err / (2 * c)


def per_class_recall(cm: np.ndarray) -> np.ndarray:
    cm = np.asarray(cm, dtype=np.int64)
    class_sizes = cm.sum(axis=1)
    if (class_sizes == 0).any():
        empty = np.flatnonzero(class_sizes == 0).tolist()
        raise ValueError(f"classes {empty} have no true samples")
    return np.diag(cm) / class_sizes


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    reject: bool
    no_decision: bool = False
    n_used: int = 0


def _exact_min_rank_p(double_ranks: np.ndarray, w_double: int) -> float:
    """P(min(W+, W-) <= observed) by DP over the W+ distribution (doubled ranks)."""
    total = int(double_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in double_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    sums = np.arange(total + 1)
    favorable = counts[np.minimum(sums, total - sums) <= w_double].sum()
    return float(favorable / counts.sum())


def wilcoxon_signed_rank(a, b, alpha: float = 0.05, exact_limit: int = 20) -> WilcoxonResult:
    """Two-sided paired Wilcoxon test: W = min(W+, W-), mid-rank ties, zeros dropped.

    Exact p by enumeration over sign assignments for n <= exact_limit,
    normal approximation with tie correction above.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-D with equal length")
    diffs = a - b
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n == 0:
        return WilcoxonResult(statistic=float("nan"), p_value=float("nan"), reject=False,
                              no_decision=True, n_used=0)
    if n < 5:
        raise ValueError(f"need >= 5 nonzero differences, got {n}")

    abs_d = np.abs(diffs)
    order = np.argsort(abs_d, kind="stable")
    ranks = np.empty(n)
    sorted_abs = abs_d[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # mid-rank
        i = j + 1

    w_plus = float(ranks[diffs > 0].sum())
    w_minus = float(ranks[diffs < 0].sum())
    w = min(w_plus, w_minus)

    if n <= exact_limit:
        double_ranks = np.rint(2.0 * ranks).astype(np.int64)
        p = _exact_min_rank_p(double_ranks, int(round(2.0 * w)))
    else:
        mu = n * (n + 1) / 4.0
        _, tie_counts = np.unique(sorted_abs, return_counts=True)
        tie_term = float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
        z = (w_plus - mu) / math.sqrt(var)
        p = math.erfc(abs(z) / math.sqrt(2.0))
    p = min(1.0, p)
    return WilcoxonResult(statistic=w, p_value=p, reject=p < alpha, n_used=n)


@dataclass(frozen=True)
class ExperimentConfig:
    """Free parameters of the end-to-end pipeline evaluated by the hold-out."""

    window_ms: float = 150.0
    stride_ms: float = 100.0
    dict_method: str = "hopf"  # one of: opf, dopf, hopf, kmeans
    flat_kmax: int = 50
    # small layer-1 k keeps the dictionary fine-grained; the cut criterion
    # favors coarse partitions, so a large k collapses the vocabulary
    schedule: LayerSchedule = field(default_factory=lambda: LayerSchedule(2, 3, (0.5,)))
    kmeans_k: int | None = None  # None: use the deep forest's last-layer size
    classifier: str = "sopf"  # or: bayes
    rbm_ratio: float | None = None
    rbm_hyper: rbm_mod.RbmHyper = field(default_factory=rbm_mod.RbmHyper)
    normalize_histograms: bool = False
    shuffle_labels: bool = False  # null-distribution control


@dataclass(frozen=True)
class EvalReport:
    accuracies: list[float]
    mean: float
    std: float
    classes: list[str]
    recall_means: list[float]
    recall_stds: list[float]
    config: dict
    n_runs: int
    split: float
    seed: int


def _learn_dictionary(train_desc: np.ndarray, config: ExperimentConfig, seed: int):
    method = config.dict_method
    if method == "opf":
        return dict_flat_opf(train_desc, min(config.flat_kmax, train_desc.shape[0] - 1))
    if method in ("dopf", "hopf"):
        df = train_deep_forest(train_desc, config.schedule)
        return dict_dopf(df) if method == "dopf" else dict_hopf(df)
    if method == "kmeans":
        k = config.kmeans_k
        if k is None:
            df = train_deep_forest(train_desc, config.schedule)
            k = df.layer_sizes[-1]
        from .dictionary import Dictionary

        model = kmeans_cluster(train_desc, min(k, train_desc.shape[0]), seed=seed)
        return Dictionary(words=model.centroids, method="kmeans")
    raise ValueError(f"unknown dictionary method {method!r}")


def _stratified_subject_split(subjects, labels, split, rng):
    train, test = [], []
    for cls in sorted(set(labels)):
        members = [s for s, l in zip(subjects, labels) if l == cls]
        if len(members) < 2:
            raise ValueError(f"class {cls!r} has {len(members)} subjects; cannot split")
        members = list(rng.permutation(members))
        n_train = int(round(split * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        train.extend(members[:n_train])
        test.extend(members[n_train:])
    return set(train), set(test)


def holdout_experiment(
    signals: list[MultiChannelSignal],
    config: ExperimentConfig = ExperimentConfig(),
    n_runs: int = 15,
    split: float = 0.5,
    seed: int = 0,
) -> EvalReport:
    """Seeded stratified subject-level hold-out; dictionary learned on training data only."""
    subjects = [s.subject_id for s in signals]
    if len(set(subjects)) != len(subjects):
        raise ValueError("duplicate subject ids")
    labels = [s.label for s in signals]
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError("need >= 2 classes")
    class_index = {c: i for i, c in enumerate(classes)}

    # extraction is split-independent; do it once
    desc_by_subject = {
        s.subject_id: descriptor_matrix(extract_descriptors(s, config.window_ms, config.stride_ms))
        for s in signals
    }
    label_by_subject = dict(zip(subjects, labels))

    accuracies = []
    recalls = []
    for run in range(n_runs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, run]))
        run_labels = dict(label_by_subject)
        if config.shuffle_labels:
            shuffled = rng.permutation(list(run_labels.values()))
            run_labels = dict(zip(run_labels.keys(), shuffled))
        train_set, test_set = _stratified_subject_split(
            subjects, [run_labels[s] for s in subjects], split, rng
        )

        train_desc = np.concatenate([desc_by_subject[s] for s in sorted(train_set)])
        dict_seed = int(rng.integers(2**63))
        dictionary = _learn_dictionary(train_desc, config, dict_seed)

        def features_for(subject_set):
            ids = sorted(subject_set)
            hists = np.stack(
                [quantize(desc_by_subject[s], dictionary).counts for s in ids]
            ).astype(np.float64)
            if config.normalize_histograms or config.rbm_ratio is not None:
                hists = rbm_mod.normalize_histograms(hists)
            return ids, hists

        train_ids, train_x = features_for(train_set)
        test_ids, test_x = features_for(test_set)
        if config.rbm_ratio is not None:
            model = rbm_mod.train_rbm(
                train_x, config.rbm_ratio,
                rbm_mod.RbmHyper(
                    lr=config.rbm_hyper.lr, epochs=config.rbm_hyper.epochs,
                    batch=config.rbm_hyper.batch, seed=dict_seed,
                ),
            )
            train_x = rbm_mod.compress(model, train_x)
            test_x = rbm_mod.compress(model, test_x)

        train_y = [run_labels[s] for s in train_ids]
        test_y = [run_labels[s] for s in test_ids]
        if config.classifier == "sopf":
            model = classify.train_sopf(train_x, train_y)
            preds = [classify.predict_sopf(model, x)[0] for x in test_x]
        elif config.classifier == "bayes":
            model = classify.train_bayes(train_x, train_y)
            preds = [classify.predict_bayes(model, x) for x in test_x]
        else:
            raise ValueError(f"unknown classifier {config.classifier!r}")

        cm = confusion_matrix(
            [class_index[l] for l in test_y], [class_index[p] for p in preds], len(classes)
        )
        accuracies.append(balanced_accuracy(cm))
        recalls.append(per_class_recall(cm))

    acc = np.array(accuracies)
    rec = np.stack(recalls)
    ddof = 1 if n_runs > 1 else 0
    return EvalReport(
        accuracies=[float(x) for x in acc],
        mean=float(acc.mean()),
        std=float(acc.std(ddof=ddof)),
        classes=classes,
        recall_means=[float(x) for x in rec.mean(axis=0)],
        recall_stds=[float(x) for x in rec.std(axis=0, ddof=ddof)],
        config={
            "window_ms": config.window_ms,
            "stride_ms": config.stride_ms,
            "dict_method": config.dict_method,
            "classifier": config.classifier,
            "rbm_ratio": config.rbm_ratio,
            "normalize_histograms": config.normalize_histograms,
            "shuffle_labels": config.shuffle_labels,
        },
        n_runs=n_runs,
        split=split,
        seed=seed,
    )


def report_table(report: EvalReport) -> str:
    """Aligned plain-text table: balanced accuracy and per-class recalls, mean +/- std."""
    cells = [("balanced_acc", report.mean, report.std)]
    for cls, m, s in zip(report.classes, report.recall_means, report.recall_stds):
        cells.append((f"recall_{cls}", m, s))
    name_w = max(len(c[0]) for c in cells)
    lines = [f"{'metric':<{name_w}}  mean +/- std ({report.n_runs} runs)"]
    for name, m, s in cells:
        lines.append(f"{name:<{name_w}}  {100 * m:6.2f} +/- {100 * s:5.2f}")
    return "\n".join(lines)
