"""Numba kernels for the hot graph/clustering loops.

The best-k search re-evaluates the adjacency, density, forest, and cut for
every k in [1, k_max]; these loops dominate the runtime on large descriptor
sets, so they are compiled. All tie-breaking is by ascending node index to
keep runs bit-reproducible.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from numba import njit

NIL = -1
SIGMA_FLOOR = 1e-12
DELTA_FLOOR = 1e-12
CUT_EPS = 1e-12


def knn_precompute(points: np.ndarray, kmax: int):
    """Sorted k_max-NN lists (ascending distance, ties by index) per node.

    Returns (idx, dist, rev_rank): idx[s, j] is s's (j+1)-th nearest
    neighbor, dist the Euclidean distance, and rev_rank[s, j] the rank of s
    inside idx[s, j]'s own list (kmax when absent) -- used to close the
    adjacency symmetrically at any k <= kmax without re-scanning.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    if not (1 <= kmax < n):
        raise ValueError(f"k must satisfy 1 <= k < n; got k={kmax}, n={n}")

    sq_norms = np.einsum("ij,ij->i", pts, pts)
    idx = np.empty((n, kmax), dtype=np.int64)
    dist = np.empty((n, kmax), dtype=np.float64)
    block = max(1, int(2e7 // max(n, 1)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        d2 = sq_norms[start:stop, None] + sq_norms[None, :] - 2.0 * (pts[start:stop] @ pts.T)
        np.maximum(d2, 0.0, out=d2)
        for i in range(start, stop):
            d2[i - start, i] = np.inf  # exclude self
        if kmax < n - 1:
            part = np.argpartition(d2, kmax, axis=1)[:, :kmax]
        else:
            part = np.argsort(d2, axis=1)[:, :kmax]
        # the Gram-matrix d2 suffers cancellation (duplicates come out ~1e-13);
        # recompute the selected distances exactly before ordering
        pd = np.sqrt(
            np.einsum("ijk,ijk->ij", pts[start:stop, None, :] - pts[part], pts[start:stop, None, :] - pts[part])
        )
        order = np.lexsort((part, pd), axis=1)
        idx[start:stop] = np.take_along_axis(part, order, axis=1)
        dist[start:stop] = np.take_along_axis(pd, order, axis=1)

    nbr_order = np.argsort(idx, axis=1, kind="stable")
    sorted_ids = np.take_along_axis(idx, nbr_order, axis=1)
    rev_rank = _reverse_ranks(idx, sorted_ids, nbr_order)
    return idx, dist, rev_rank


@njit(cache=True)
def _reverse_ranks(idx, sorted_ids, nbr_order):
    n, kmax = idx.shape
    rev = np.full((n, kmax), kmax, dtype=np.int64)
    for s in range(n):
        for j in range(kmax):
            t = idx[s, j]
            lo, hi = 0, kmax
            while lo < hi:
                mid = (lo + hi) // 2
                if sorted_ids[t, mid] < s:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < kmax and sorted_ids[t, lo] == s:
                rev[s, j] = nbr_order[t, lo]
    return rev


@njit(cache=True)
def build_csr(idx, dist, rev_rank, k):
    """Symmetric closure of the k-NN relation as CSR (indptr, indices, d)."""
    n = idx.shape[0]
    deg = np.full(n, k, dtype=np.int64)
    for u in range(n):
        for r in range(k):
            if rev_rank[u, r] >= k:
                deg[idx[u, r]] += 1  # reverse-only arc idx[u,r] -> u
    indptr = np.zeros(n + 1, dtype=np.int64)
    for s in range(n):
        indptr[s + 1] = indptr[s] + deg[s]
    m = indptr[n]
    indices = np.empty(m, dtype=np.int64)
    d = np.empty(m, dtype=np.float64)
    cursor = indptr[:-1].copy()
    for s in range(n):
        for j in range(k):
            c = cursor[s]
            indices[c] = idx[s, j]
            d[c] = dist[s, j]
            cursor[s] = c + 1
    for u in range(n):
        for r in range(k):
            if rev_rank[u, r] >= k:
                t = idx[u, r]
                c = cursor[t]
                indices[c] = u
                d[c] = dist[u, r]
                cursor[t] = c + 1
    return indptr, indices, d


@njit(cache=True)
def pdf_kernel(indptr, indices, d, sigma):
    """Parzen-window density per node over its closed adjacency."""
    n = indptr.shape[0] - 1
    rho = np.empty(n)
    norm = 1.0 / math.sqrt(2.0 * math.pi * sigma * sigma)
    inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma)
    for s in range(n):
        acc = 0.0
        for a in range(indptr[s], indptr[s + 1]):
            acc += math.exp(-d[a] * d[a] * inv_two_sigma2)
        deg = indptr[s + 1] - indptr[s]
        rho[s] = norm * acc / deg
    return rho


@njit(cache=True)
def delta_kernel(indptr, indices, rho):
    """Smallest nonzero density gap across an arc; floor when all equal."""
    n = indptr.shape[0] - 1
    best = np.inf
    for s in range(n):
        for a in range(indptr[s], indptr[s + 1]):
            gap = abs(rho[indices[a]] - rho[s])
            if gap > 0.0 and gap < best:
                best = gap
    if not np.isfinite(best):
        return DELTA_FLOOR
    return best


@njit(cache=True)
def ift_cluster(indptr, indices, rho, delta):
    """Optimum-path forest by max-priority propagation.

    Every node starts at handicap rho - delta; a node extracted while still
    at its handicap is elected prototype and raised to rho. Extracted nodes
    offer neighbors min(own cost, neighbor density). Equal priorities pop in
    ascending node index.
    """
    n = indptr.shape[0] - 1
    cost = rho - delta
    for s in range(n):
        if cost[s] >= rho[s]:  # delta lost to rounding: keep the handicap strict
            cost[s] = np.nextafter(rho[s], -np.inf)
    pred = np.full(n, NIL, dtype=np.int64)
    label = np.full(n, NIL, dtype=np.int64)
    done = np.zeros(n, dtype=np.uint8)
    conquered = np.zeros(n, dtype=np.uint8)
    n_proto = 0
    proto = np.empty(n, dtype=np.int64)

    heap = [(-cost[0], 0)]
    heap.pop()
    for s in range(n):
        heapq.heappush(heap, (-cost[s], s))
    while len(heap) > 0:
        neg, s = heapq.heappop(heap)
        if done[s] or -neg != cost[s]:
            continue
        done[s] = 1
        if not conquered[s]:
            cost[s] = rho[s]
            pred[s] = NIL
            label[s] = n_proto
            proto[n_proto] = s
            n_proto += 1
        for a in range(indptr[s], indptr[s + 1]):
            t = indices[a]
            if done[t]:
                continue
            offer = min(cost[s], rho[t])
            if offer > cost[t]:
                cost[t] = offer
                pred[t] = s
                label[t] = label[s]
                conquered[t] = 1
                heapq.heappush(heap, (-offer, t))
    return cost, pred, label, proto[:n_proto]


@njit(cache=True)
def ncut_kernel(indptr, indices, d, labels, n_clusters):
    """Shi-Malik normalized cut with similarity weights 1/(d + eps)."""
    cut = np.zeros(n_clusters)
    assoc = np.zeros(n_clusters)
    n = indptr.shape[0] - 1
    for s in range(n):
        ls = labels[s]
        for a in range(indptr[s], indptr[s + 1]):
            w = 1.0 / (d[a] + CUT_EPS)
            if labels[indices[a]] == ls:
                assoc[ls] += w
            else:
                cut[ls] += w
    total = 0.0
    for c in range(n_clusters):
        denom = cut[c] + assoc[c]
        if denom > 0.0:
            total += cut[c] / denom
    return total
