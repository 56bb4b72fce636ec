"""Deep and hierarchical dictionary learning plus BoVW quantization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cluster import Forest, cluster_best_k


@dataclass(frozen=True)
class LayerSchedule:
    """Per-layer k_max schedule: absolute for layer 1, fractional after.

    The default mirrors the 4-layer setting used throughout: k_max 100 for
    layer 1, then 1% of the previous layer's cluster count for layer 2 and
    10% for layers 3 and 4.
    """

    n_layers: int = 4
    layer1_kmax: int = 100
    fractions: tuple[float, ...] = (0.01, 0.1, 0.1)

    def __post_init__(self):
        if self.n_layers < 1 or self.layer1_kmax < 1:
            raise ValueError("n_layers and layer1_kmax must be >= 1")
        if len(self.fractions) != self.n_layers - 1:
            raise ValueError(
                f"need {self.n_layers - 1} fractions for {self.n_layers} layers, "
                f"got {len(self.fractions)}"
            )
        if any(not (0 < f <= 1) for f in self.fractions):
            raise ValueError("fractions must lie in (0, 1]")


@dataclass(frozen=True)
class DeepLayer:
    forest: Forest
    vectors: np.ndarray  # prototype vectors, ascending original index


@dataclass(frozen=True)
class DeepForest:
    layers: list[DeepLayer]

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def layer_sizes(self) -> list[int]:
        return [layer.vectors.shape[0] for layer in self.layers]


@dataclass(frozen=True)
class Dictionary:
    """Visual words with their learning method and per-word layer provenance."""

    words: np.ndarray
    method: str  # one of OPF, dOPF, hOPF, kmeans
    provenance: np.ndarray = field(default=None)

    def __post_init__(self):
        w = np.asarray(self.words, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1:
            raise ValueError("dictionary needs >= 1 word")
        prov = self.provenance
        if prov is None:
            prov = np.zeros(w.shape[0], dtype=np.int64)
        prov = np.asarray(prov, dtype=np.int64)
        if prov.shape[0] != w.shape[0]:
            raise ValueError("provenance length must match word count")
        object.__setattr__(self, "words", w)
        object.__setattr__(self, "provenance", prov)

    @property
    def size(self) -> int:
        return self.words.shape[0]

    @property
    def dim(self) -> int:
        return self.words.shape[1]


@dataclass(frozen=True)
class Histogram:
    counts: np.ndarray
    subject_id: str
    label: str


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def resolve_schedule(schedule: LayerSchedule, observed_sizes: list[int]) -> int:
    """k_max for the next layer: max(1, round(f * |S_prev|)), capped at |S_prev| - 1."""
    i = len(observed_sizes)  # layers trained so far
    if i < 1:
        raise ValueError("layer 1 uses layer1_kmax directly")
    if i >= schedule.n_layers:
        raise ValueError(f"schedule has only {schedule.n_layers} layers")
    prev = observed_sizes[-1]
    if prev <= 1:
        raise ValueError("previous layer collapsed to one prototype; schedule terminates")
    k = max(1, _round_half_up(schedule.fractions[i - 1] * prev))
    return min(k, prev - 1)


def train_deep_forest(descriptors: np.ndarray, schedule: LayerSchedule) -> DeepForest:
    """Layered clustering: each layer clusters the previous layer's prototypes.

    Stops early once a layer yields a single prototype.
    """
    data = np.asarray(descriptors, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("need at least 2 descriptors")
    layers = []
    current = data
    for i in range(schedule.n_layers):
        if i == 0:
            kmax = min(schedule.layer1_kmax, current.shape[0] - 1)
        else:
            if current.shape[0] <= 1:
                break
            kmax = resolve_schedule(schedule, [l.vectors.shape[0] for l in layers])
        forest = cluster_best_k(current, kmax)
        proto_idx = np.sort(forest.prototypes)
        vectors = current[proto_idx].copy()
        layers.append(DeepLayer(forest=forest, vectors=vectors))
        if vectors.shape[0] <= 1:
            break
        current = vectors
    return DeepForest(layers=layers)


def dict_dopf(df: DeepForest) -> Dictionary:
    """Dictionary from the last layer's prototypes only."""
    return Dictionary(words=df.layers[-1].vectors.copy(), method="dOPF")


def dict_hopf(df: DeepForest) -> Dictionary:
    """Dictionary concatenating every layer's prototypes (size = sum of layer sizes).

    Duplicate vectors surviving across layers keep distinct bins; provenance
    records each word's 1-based layer index.
    """
    words = np.concatenate([layer.vectors for layer in df.layers])
    provenance = np.concatenate(
        [np.full(layer.vectors.shape[0], i + 1, dtype=np.int64) for i, layer in enumerate(df.layers)]
    )
    return Dictionary(words=words, method="hOPF", provenance=provenance)


def dict_flat_opf(descriptors: np.ndarray, k_max: int) -> Dictionary:
    """Single-level OPF dictionary: prototypes of the best-k forest."""
    data = np.asarray(descriptors, dtype=np.float64)
    forest = cluster_best_k(data, k_max)
    return Dictionary(words=data[np.sort(forest.prototypes)].copy(), method="OPF")


def quantize(
    descriptors: np.ndarray, dictionary: Dictionary, subject_id: str = "", label: str = "NA"
) -> Histogram:
    """Histogram of nearest-word assignments (ties go to the lowest word index)."""
    data = np.asarray(descriptors, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ValueError("need >= 1 descriptor to quantize")
    if data.shape[1] != dictionary.dim:
        raise ValueError(
            f"descriptor dimension {data.shape[1]} != dictionary dimension {dictionary.dim}"
        )
    words = dictionary.words
    counts = np.zeros(dictionary.size, dtype=np.int64)
    block = max(1, int(2e7 // max(words.shape[0], 1)))
    w_sq = np.sum(words**2, axis=1)
    for start in range(0, data.shape[0], block):
        chunk = data[start : start + block]
        d2 = np.sum(chunk**2, axis=1)[:, None] - 2.0 * chunk @ words.T + w_sq[None, :]
        nearest = np.argmin(d2, axis=1)
        np.add.at(counts, nearest, 1)
    return Histogram(counts=counts, subject_id=subject_id, label=label)
