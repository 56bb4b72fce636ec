"""Supervised classifiers over BoVW histograms: supervised OPF and a Bayes classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VAR_FLOOR = 1e-6


@dataclass(frozen=True)
class SopfModel:
    vectors: np.ndarray
    labels: np.ndarray  # class indices
    classes: list
    training_cost: np.ndarray
    ordered_samples: np.ndarray  # indices by ascending (cost, index)
    prototypes: np.ndarray


@dataclass(frozen=True)
class BayesModel:
    classes: list
    means: np.ndarray  # (c, D)
    variances: np.ndarray  # (c, D), floored
    priors: np.ndarray  # (c,)


def _as_matrix(vectors) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D sample matrix, got shape {arr.shape}")
    return arr


def _encode_labels(labels):
    classes = sorted(set(labels))
    lut = {c: i for i, c in enumerate(classes)}
    return classes, np.array([lut[l] for l in labels], dtype=np.int64)


def _mst_edges(dist: np.ndarray):
    """Prim MST over the complete graph; ties by ascending (weight, index)."""
    n = dist.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    in_tree[0] = True
    best[0] = -np.inf  # never re-selected
    np.minimum(best, dist[0], out=best)
    parent[~in_tree] = 0
    edges = []
    for _ in range(n - 1):
        cand = np.where(~in_tree, best, np.inf)
        nxt = int(np.argmin(cand))  # argmin ties -> lowest index
        edges.append((parent[nxt], nxt))
        in_tree[nxt] = True
        better = dist[nxt] < best
        better &= ~in_tree
        parent[better] = nxt
        best[better] = dist[nxt][better]
        best[nxt] = -np.inf
    return edges


def train_sopf(vectors, labels) -> SopfModel:
    """Supervised OPF: MST-boundary prototypes, min-max path costs, label propagation."""
    data = _as_matrix(vectors)
    classes, y = _encode_labels(labels)
    if len(classes) < 2:
        raise ValueError("supervised OPF needs >= 2 classes")
    n = data.shape[0]
    d2 = (
        np.sum(data**2, axis=1)[:, None]
        - 2.0 * data @ data.T
        + np.sum(data**2, axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, 0.0)

    proto = np.zeros(n, dtype=bool)
    for a, b in _mst_edges(dist):
        if y[a] != y[b]:
            proto[a] = True
            proto[b] = True

    # min-max path costs from the prototype set (Prim-like propagation)
    cost = np.where(proto, 0.0, np.inf)
    out_label = np.where(proto, y, -1)
    done = np.zeros(n, dtype=bool)
    for _ in range(n):
        cand = np.where(~done, cost, np.inf)
        s = int(np.argmin(cand))
        done[s] = True
        offers = np.maximum(cost[s], dist[s])
        better = offers < cost
        better &= ~done
        cost[better] = offers[better]
        out_label[better] = out_label[s]

    order = np.lexsort((np.arange(n), cost))
    return SopfModel(
        vectors=data,
        labels=out_label,
        classes=classes,
        training_cost=cost,
        ordered_samples=order,
        prototypes=np.flatnonzero(proto),
    )


def predict_sopf(model: SopfModel, x) -> tuple:
    """Classify one vector: min over training samples of max(training cost, distance).

    Scans samples by ascending training cost and stops once no remaining
    sample can improve; ties prefer lower training cost, then lower index.
    """
    v = np.asarray(x, dtype=np.float64).ravel()
    if v.size != model.vectors.shape[1]:
        raise ValueError(f"dimension mismatch: {v.size} != {model.vectors.shape[1]}")
    best_cost = np.inf
    best_label = -1
    for s in model.ordered_samples:
        tc = model.training_cost[s]
        if tc >= best_cost:
            break
        c = max(tc, float(np.linalg.norm(model.vectors[s] - v)))
        if c < best_cost:
            best_cost = c
            best_label = model.labels[s]
    return model.classes[best_label], best_cost


def train_bayes(vectors, labels) -> BayesModel:
    """Per-class diagonal Gaussians (unbiased variance, floored) with empirical priors."""
    data = _as_matrix(vectors)
    classes, y = _encode_labels(labels)
    c = len(classes)
    dim = data.shape[1]
    means = np.empty((c, dim))
    variances = np.empty((c, dim))
    priors = np.empty(c)
    for i in range(c):
        members = data[y == i]
        if members.shape[0] < 2:
            raise ValueError(f"class {classes[i]!r} has {members.shape[0]} samples; need >= 2")
        means[i] = members.mean(axis=0)
        variances[i] = np.maximum(members.var(axis=0, ddof=1), VAR_FLOOR)
        priors[i] = members.shape[0] / data.shape[0]
    return BayesModel(classes=classes, means=means, variances=variances, priors=priors)


def predict_bayes(model: BayesModel, x):
    """Maximum posterior class in the log domain; ties go to the lower class index."""
    v = np.asarray(x, dtype=np.float64).ravel()
    if v.size != model.means.shape[1]:
        raise ValueError(f"dimension mismatch: {v.size} != {model.means.shape[1]}")
    log_post = (
        np.log(model.priors)
        - 0.5 * np.sum(np.log(2.0 * np.pi * model.variances), axis=1)
        - 0.5 * np.sum((v[None, :] - model.means) ** 2 / model.variances, axis=1)
    )
    return model.classes[int(np.argmax(log_post))]
