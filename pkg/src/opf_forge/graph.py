"""k-NN graph construction, Parzen-window density, and normalized-cut scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import SIGMA_FLOOR


@dataclass(frozen=True)
class KnnGraph:
    """Symmetrically-closed k-NN adjacency with per-node density.

    Adjacency is CSR: node s's neighbors are indices[indptr[s]:indptr[s+1]]
    with arc distances in dist at the same positions. Every arc has its
    reverse with equal distance.
    """

    n: int
    k: int
    indptr: np.ndarray
    indices: np.ndarray
    dist: np.ndarray
    d_f: float
    sigma: float
    rho: np.ndarray

    def neighbors(self, s: int) -> np.ndarray:
        return self.indices[self.indptr[s] : self.indptr[s + 1]]

    def arc_dists(self, s: int) -> np.ndarray:
        return self.dist[self.indptr[s] : self.indptr[s + 1]]


@dataclass(frozen=True)
class ClusterLabeling:
    labels: np.ndarray
    c: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if self.c < 1:
            raise ValueError("cluster count must be >= 1")
        present = np.unique(lab)
        if present.min() < 0 or present.max() >= self.c:
            raise ValueError(f"labels outside [0, {self.c})")
        if present.size != self.c:
            missing = sorted(set(range(self.c)) - set(present.tolist()))
            raise ValueError(f"empty cluster ids {missing}")
        object.__setattr__(self, "labels", lab)


class KnnPrecompute:
    """Sorted k_max-NN lists reusable for every k <= k_max (best-k search)."""

    def __init__(self, points: np.ndarray, kmax: int):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-D, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        self.points = pts
        self.kmax = kmax
        self.idx, self.nn_dist, self.rev_rank = _kernels.knn_precompute(pts, kmax)

    def graph(self, k: int) -> KnnGraph:
        if not (1 <= k <= self.kmax):
            raise ValueError(f"k={k} outside [1, {self.kmax}]")
        indptr, indices, dist = _kernels.build_csr(self.idx, self.nn_dist, self.rev_rank, k)
        d_f = float(self.nn_dist[:, k - 1].max())
        sigma = d_f / 3.0 if d_f >= SIGMA_FLOOR else SIGMA_FLOOR
        rho = _kernels.pdf_kernel(indptr, indices, dist, sigma)
        return KnnGraph(
            n=self.points.shape[0],
            k=k,
            indptr=indptr,
            indices=indices,
            dist=dist,
            d_f=d_f,
            sigma=sigma,
            rho=rho,
        )


def build_knn_graph(points: np.ndarray, k: int) -> KnnGraph:
    """Symmetric closure of the Euclidean k-NN relation, with density populated."""
    return KnnPrecompute(points, k).graph(k)


def compute_pdf(g: KnnGraph) -> np.ndarray:
    """Gaussian Parzen-window density of every node over its adjacency."""
    return _kernels.pdf_kernel(g.indptr, g.indices, g.dist, g.sigma)


def normalized_cut(g: KnnGraph, labeling: ClusterLabeling) -> float:
    """Sum over clusters of cut/(cut + assoc) with weights 1/(d + eps)."""
    if labeling.labels.shape[0] != g.n:
        raise ValueError(f"labeling covers {labeling.labels.shape[0]} nodes, graph has {g.n}")
    return float(_kernels.ncut_kernel(g.indptr, g.indices, g.dist, labeling.labels, labeling.c))
