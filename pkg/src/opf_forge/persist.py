"""Versioned on-disk artifacts: JSON models/reports and the descriptor CSV."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classify import BayesModel, SopfModel
from .dictionary import Dictionary, Histogram
from .evaluation import EvalReport
from .rbm import RbmHyper, RbmModel

SCHEMA_VERSION = 1


class ArtifactError(ValueError):
    """Raised for schema violations in persisted artifacts."""


def _dump(path, kind: str, payload: dict) -> None:
    doc = {"version": SCHEMA_VERSION, "kind": kind, **payload}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _load(path, kind: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ArtifactError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise ArtifactError(f"{path}: missing 'version' field")
    if doc["version"] > SCHEMA_VERSION:
        raise ArtifactError(
            f"{path}: schema version {doc['version']} newer than supported {SCHEMA_VERSION}"
        )
    if doc.get("kind") != kind:
        raise ArtifactError(f"{path}: field 'kind' is {doc.get('kind')!r}, expected {kind!r}")
    return doc


def save_dictionary(path, d: Dictionary) -> None:
    _dump(path, "dictionary", {
        "method": d.method,
        "dim": d.dim,
        "words": d.words.tolist(),
        "provenance": d.provenance.tolist(),
    })


def load_dictionary(path) -> Dictionary:
    doc = _load(path, "dictionary")
    words = np.asarray(doc["words"], dtype=np.float64)
    if words.ndim != 2 or words.shape[1] != doc["dim"]:
        raise ArtifactError(f"{path}: field 'words' inconsistent with 'dim'={doc['dim']}")
    return Dictionary(
        words=words,
        method=doc["method"],
        provenance=np.asarray(doc["provenance"], dtype=np.int64),
    )


def save_histograms(path, hists: list[Histogram]) -> None:
    if not hists:
        raise ArtifactError("no histograms to save")
    dim = hists[0].counts.shape[0]
    _dump(path, "histograms", {
        "dim": dim,
        "items": [
            {"subject": h.subject_id, "label": h.label, "counts": h.counts.tolist()}
            for h in hists
        ],
    })


def load_histograms(path) -> list[Histogram]:
    doc = _load(path, "histograms")
    out = []
    for item in doc["items"]:
        counts = np.asarray(item["counts"], dtype=np.int64)
        if counts.shape[0] != doc["dim"]:
            raise ArtifactError(
                f"{path}: histogram for {item['subject']!r} has dimension "
                f"{counts.shape[0]}, file says dim={doc['dim']}"
            )
        out.append(Histogram(counts=counts, subject_id=item["subject"], label=item["label"]))
    return out


def save_sopf(path, m: SopfModel) -> None:
    _dump(path, "sopf_model", {
        "classes": list(m.classes),
        "vectors": m.vectors.tolist(),
        "labels": m.labels.tolist(),
        "training_cost": m.training_cost.tolist(),
        "ordered_samples": m.ordered_samples.tolist(),
        "prototypes": m.prototypes.tolist(),
    })


def load_sopf(path) -> SopfModel:
    doc = _load(path, "sopf_model")
    return SopfModel(
        vectors=np.asarray(doc["vectors"], dtype=np.float64),
        labels=np.asarray(doc["labels"], dtype=np.int64),
        classes=doc["classes"],
        training_cost=np.asarray(doc["training_cost"], dtype=np.float64),
        ordered_samples=np.asarray(doc["ordered_samples"], dtype=np.int64),
        prototypes=np.asarray(doc["prototypes"], dtype=np.int64),
    )


def save_bayes(path, m: BayesModel) -> None:
    _dump(path, "bayes_model", {
        "classes": list(m.classes),
        "means": m.means.tolist(),
        "variances": m.variances.tolist(),
        "priors": m.priors.tolist(),
    })


def load_bayes(path) -> BayesModel:
    doc = _load(path, "bayes_model")
    return BayesModel(
        classes=doc["classes"],
        means=np.asarray(doc["means"], dtype=np.float64),
        variances=np.asarray(doc["variances"], dtype=np.float64),
        priors=np.asarray(doc["priors"], dtype=np.float64),
    )


def save_rbm(path, m: RbmModel) -> None:
    _dump(path, "rbm_model", {
        "ratio": m.ratio,
        "visible_dim": m.visible_dim,
        "hidden_dim": m.hidden_dim,
        "weights": m.weights.tolist(),
        "b_vis": m.b_vis.tolist(),
        "b_hid": m.b_hid.tolist(),
        "hyper": {"lr": m.hyper.lr, "epochs": m.hyper.epochs,
                  "batch": m.hyper.batch, "seed": m.hyper.seed},
    })


def load_rbm(path) -> RbmModel:
    doc = _load(path, "rbm_model")
    h = doc["hyper"]
    return RbmModel(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        b_vis=np.asarray(doc["b_vis"], dtype=np.float64),
        b_hid=np.asarray(doc["b_hid"], dtype=np.float64),
        ratio=doc["ratio"],
        hyper=RbmHyper(lr=h["lr"], epochs=h["epochs"], batch=h["batch"], seed=h["seed"]),
    )


def save_report(path, r: EvalReport) -> None:
    _dump(path, "eval_report", {
        "accuracies": r.accuracies,
        "mean": r.mean,
        "std": r.std,
        "classes": r.classes,
        "recall_means": r.recall_means,
        "recall_stds": r.recall_stds,
        "config": r.config,
        "n_runs": r.n_runs,
        "split": r.split,
        "seed": r.seed,
    })


def load_report(path) -> EvalReport:
    doc = _load(path, "eval_report")
    return EvalReport(
        accuracies=doc["accuracies"], mean=doc["mean"], std=doc["std"],
        classes=doc["classes"], recall_means=doc["recall_means"],
        recall_stds=doc["recall_stds"], config=doc["config"],
        n_runs=doc["n_runs"], split=doc["split"], seed=doc["seed"],
    )


def save_descriptor_csv(path, rows) -> None:
    """rows: iterable of (subject_id, label, window_index, vector)."""
    rows = list(rows)
    if not rows:
        raise ArtifactError("no descriptors to save")
    dim = len(rows[0][3])
    lines = [f"dim={dim}", "subject,label,window," + ",".join(f"c{i}" for i in range(dim))]
    for subject, label, window, vec in rows:
        if len(vec) != dim:
            raise ArtifactError(f"descriptor for {subject!r} has dimension {len(vec)}, not {dim}")
        lines.append(f"{subject},{label},{window}," + ",".join(repr(float(v)) for v in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_descriptor_csv(path):
    """Returns (dim, rows) with rows as (subject_id, label, window_index, np vector)."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").split("\n") if ln.strip()]
    if not lines or not lines[0].startswith("dim="):
        raise ArtifactError(f"{path}: first line must be 'dim=<D>'")
    try:
        dim = int(lines[0][4:])
    except ValueError:
        raise ArtifactError(f"{path}: bad dim header {lines[0]!r}") from None
    rows = []
    for no, line in enumerate(lines[2:], start=1):
        parts = line.split(",")
        if len(parts) != 3 + dim:
            raise ArtifactError(f"{path}: row {no} has {len(parts)} fields, expected {3 + dim}")
        rows.append(
            (parts[0], parts[1], int(parts[2]), np.asarray([float(x) for x in parts[3:]]))
        )
    if not rows:
        raise ArtifactError(f"{path}: no descriptor rows")
    return dim, rows
