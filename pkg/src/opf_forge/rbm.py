"""Bernoulli RBM (CD-1) compression of histogram representations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STANDARD_RATIOS = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class RbmHyper:
    lr: float = 0.1
    epochs: int = 100
    batch: int = 10
    seed: int = 0


@dataclass(frozen=True)
class RbmModel:
    weights: np.ndarray  # (D, H)
    b_vis: np.ndarray
    b_hid: np.ndarray
    ratio: float
    hyper: RbmHyper

    @property
    def visible_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.weights.shape[1]


def hidden_size(visible_dim: int, ratio: float) -> int:
    return max(1, int(math.floor(ratio * visible_dim + 0.5)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def normalize_histograms(counts: np.ndarray) -> np.ndarray:
    """L1-normalize count rows into [0, 1] visible units."""
    arr = np.asarray(counts, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected (n, D) counts, got shape {arr.shape}")
    sums = arr.sum(axis=1, keepdims=True)
    sums[sums == 0] = 1.0
    return arr / sums


def reconstruction_mse(model: RbmModel, visible: np.ndarray) -> float:
    h = _sigmoid(visible @ model.weights + model.b_hid)
    v_rec = _sigmoid(h @ model.weights.T + model.b_vis)
    return float(np.mean((visible - v_rec) ** 2))


def train_rbm(
    histograms: np.ndarray,
    ratio: float,
    hyper: RbmHyper = RbmHyper(),
    allow_any_ratio: bool = False,
) -> RbmModel:
    """CD-1 training on L1-normalized histograms; deterministic given the seed."""
    if not allow_any_ratio and ratio not in STANDARD_RATIOS:
        raise ValueError(
            f"ratio {ratio} not in {STANDARD_RATIOS}; pass allow_any_ratio=True to override"
        )
    v_all = normalize_histograms(histograms)
    n, dim = v_all.shape
    if n < 1:
        raise ValueError("need >= 1 histogram")
    hid = hidden_size(dim, ratio)

    rng = np.random.default_rng(hyper.seed)
    w = rng.normal(0.0, 0.01, size=(dim, hid))
    b_vis = np.zeros(dim)
    b_hid = np.zeros(hid)

    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch):
            v0 = v_all[order[start : start + hyper.batch]]
            m = v0.shape[0]
            h0 = _sigmoid(v0 @ w + b_hid)
            h_sample = (rng.random(h0.shape) < h0).astype(np.float64)
            v1 = _sigmoid(h_sample @ w.T + b_vis)
            h1 = _sigmoid(v1 @ w + b_hid)
            w += hyper.lr * (v0.T @ h0 - v1.T @ h1) / m
            b_vis += hyper.lr * np.mean(v0 - v1, axis=0)
            b_hid += hyper.lr * np.mean(h0 - h1, axis=0)

    return RbmModel(weights=w, b_vis=b_vis, b_hid=b_hid, ratio=ratio, hyper=hyper)


def compress(model: RbmModel, visible: np.ndarray) -> np.ndarray:
    """Deterministic mean-field hidden probabilities for one normalized vector."""
    v = np.asarray(visible, dtype=np.float64)
    if v.shape[-1] != model.visible_dim:
        raise ValueError(f"dimension mismatch: {v.shape[-1]} != {model.visible_dim}")
    return _sigmoid(v @ model.weights + model.b_hid)
