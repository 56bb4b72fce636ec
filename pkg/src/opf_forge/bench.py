"""Wall-clock comparison of dictionary learners on identical descriptor input."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cluster import kmeans_cluster
from .dictionary import Dictionary, LayerSchedule, dict_dopf, dict_flat_opf, train_deep_forest


@dataclass(frozen=True)
class BenchConfig:
    """One learner to time: method in {opf, dopf, kmeans}.

    For kmeans, k=None borrows the last-layer size of a dopf config that ran
    earlier in the same benchmark (the usual fair-comparison setting).
    """

    method: str
    kmax: int | None = None  # flat OPF
    schedule: LayerSchedule | None = None  # dOPF
    k: int | None = None  # k-means
    seed: int = 0


@dataclass(frozen=True)
class BenchEntry:
    method: str
    seconds: float
    n_words: int
    params: dict


def bench_dictionaries(descriptors: np.ndarray, configs: list[BenchConfig]) -> list[BenchEntry]:
    """Time each dictionary learner on the same input, one process, in order."""
    data = np.asarray(descriptors, dtype=np.float64)
    if len(configs) < 2:
        raise ValueError("need >= 2 configs to compare")
    entries = []
    last_dopf_size = None
    for cfg in configs:
        start = time.perf_counter()
        if cfg.method == "opf":
            if cfg.kmax is None:
                raise ValueError("flat OPF config requires kmax")
            d = dict_flat_opf(data, cfg.kmax)
            params = {"kmax": cfg.kmax}
        elif cfg.method == "dopf":
            schedule = cfg.schedule or LayerSchedule()
            df = train_deep_forest(data, schedule)
            d = dict_dopf(df)
            last_dopf_size = df.layer_sizes[-1]
            params = {
                "layer1_kmax": schedule.layer1_kmax,
                "fractions": list(schedule.fractions),
                "layer_sizes": df.layer_sizes,
            }
        elif cfg.method == "kmeans":
            k = cfg.k if cfg.k is not None else last_dopf_size
            if k is None:
                raise ValueError("kmeans config needs k, or a dopf config run before it")
            model = kmeans_cluster(data, min(k, data.shape[0]), seed=cfg.seed)
            d = Dictionary(words=model.centroids, method="kmeans")
            params = {"k": k, "seed": cfg.seed}
        else:
            raise ValueError(f"unknown bench method {cfg.method!r}")
        elapsed = time.perf_counter() - start
        entries.append(
            BenchEntry(method=cfg.method, seconds=elapsed, n_words=d.size, params=params)
        )
    return entries
