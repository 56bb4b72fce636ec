"""Unsupervised OPF clustering, best-k model selection, and the k-means baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import ClusterLabeling, KnnGraph, KnnPrecompute, normalized_cut

NIL = _kernels.NIL


@dataclass(frozen=True)
class Forest:
    """Optimum-path forest: predecessor map, path costs, labels, prototypes."""

    predecessor: np.ndarray
    cost: np.ndarray
    cluster_label: np.ndarray
    prototypes: np.ndarray
    k_used: int

    @property
    def n_clusters(self) -> int:
        return self.prototypes.shape[0]


@dataclass(frozen=True)
class KMeansModel:
    centroids: np.ndarray
    inertia: float
    iterations_run: int
    labels: np.ndarray


def compute_delta(g: KnnGraph) -> float:
    """Minimum nonzero density gap over adjacent pairs (1e-12 on plateaus)."""
    return float(_kernels.delta_kernel(g.indptr, g.indices, g.rho))


def cluster_with_k(g: KnnGraph) -> Forest:
    """Optimum-path forest over g by max-priority propagation.

    Prototypes are the density maxima elected during propagation; labels
    flow from prototypes along optimum paths. Deterministic: ties pop in
    ascending node index.
    """
    delta = compute_delta(g)
    cost, pred, label, proto = _kernels.ift_cluster(g.indptr, g.indices, g.rho, delta)
    return Forest(predecessor=pred, cost=cost, cluster_label=label, prototypes=proto, k_used=g.k)


def cluster_best_k(points: np.ndarray, k_max: int) -> Forest:
    """Cluster with the k in [1, k_max] minimizing the normalized cut.

    Single-cluster outcomes score a degenerate 0 and are skipped unless
    every k collapses to one cluster; ties break toward smaller k.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if not (1 <= k_max <= n - 1):
        raise ValueError(f"k_max={k_max} outside [1, {n - 1}]")
    pre = KnnPrecompute(pts, k_max)

    best_forest = None
    best_ncut = np.inf
    fallback_flat = None  # multi-cluster but zero-length longest edge
    fallback_single = None  # single-cluster outcome
    for k in range(1, k_max + 1):
        g = pre.graph(k)
        forest = cluster_with_k(g)
        if forest.n_clusters <= 1:
            if fallback_single is None:
                fallback_single = forest
            continue
        if g.d_f == 0.0:
            # every arc joins coincident points; the density is information-free
            if fallback_flat is None:
                fallback_flat = forest
            continue
        score = normalized_cut(g, ClusterLabeling(forest.cluster_label, forest.n_clusters))
        if score < best_ncut:
            best_ncut = score
            best_forest = forest
    if best_forest is not None:
        return best_forest
    if fallback_flat is not None:
        return fallback_flat
    if fallback_single is not None:
        return fallback_single
    raise RuntimeError("no clustering produced")  # unreachable: n >= 2


def _farthest_point_init(pts: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = pts.shape[0]
    chosen = [int(rng.integers(n))]
    min_d2 = np.sum((pts - pts[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(min_d2))  # argmax ties -> lowest index
        chosen.append(nxt)
        np.minimum(min_d2, np.sum((pts - pts[nxt]) ** 2, axis=1), out=min_d2)
    return pts[chosen].copy()


def kmeans_cluster(points: np.ndarray, k: int, seed: int, max_iter: int = 300) -> KMeansModel:
    """Lloyd iterations from a seeded greedy farthest-point initialization."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k={k} outside [1, {n}]")
    centroids = _farthest_point_init(pts, k, seed)
    labels = np.full(n, -1, dtype=np.int64)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = (
            np.sum(pts**2, axis=1)[:, None]
            - 2.0 * pts @ centroids.T
            + np.sum(centroids**2, axis=1)[None, :]
        )
        new_labels = np.argmin(d2, axis=1)
        for c in range(k):
            members = new_labels == c
            if not members.any():
                # steal the point farthest from its assigned centroid
                worst = int(np.argmax(d2[np.arange(n), new_labels]))
                new_labels[worst] = c
                members = new_labels == c
            centroids[c] = pts[members].mean(axis=0)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    diffs = pts - centroids[labels]
    inertia = float(np.sum(diffs * diffs))
    return KMeansModel(
        centroids=centroids, inertia=inertia, iterations_run=iterations, labels=labels
    )
