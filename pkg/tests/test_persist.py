import json

import numpy as np
import pytest

from opf_forge import persist
from opf_forge.classify import train_bayes, train_sopf
from opf_forge.dictionary import Dictionary, Histogram
from opf_forge.persist import ArtifactError
from opf_forge.rbm import RbmHyper, train_rbm


def test_dictionary_roundtrip(tmp_path):
    d = Dictionary(
        words=np.random.default_rng(0).normal(size=(5, 3)),
        method="hOPF",
        provenance=np.array([1, 1, 2, 2, 3]),
    )
    p = tmp_path / "dict.json"
    persist.save_dictionary(p, d)
    loaded = persist.load_dictionary(p)
    np.testing.assert_array_equal(loaded.words, d.words)
    np.testing.assert_array_equal(loaded.provenance, d.provenance)
    assert loaded.method == "hOPF"


def test_histograms_roundtrip(tmp_path):
    hists = [
        Histogram(counts=np.array([3, 0, 9]), subject_id="s1", label="HC"),
        Histogram(counts=np.array([1, 2, 0]), subject_id="s2", label="PD"),
    ]
    p = tmp_path / "h.json"
    persist.save_histograms(p, hists)
    loaded = persist.load_histograms(p)
    assert [h.subject_id for h in loaded] == ["s1", "s2"]
    np.testing.assert_array_equal(loaded[0].counts, [3, 0, 9])
    assert loaded[1].label == "PD"


def test_sopf_roundtrip(tmp_path):
    m = train_sopf(np.array([[0.0], [1.0], [10.0], [11.0]]), ["A", "A", "B", "B"])
    p = tmp_path / "m.json"
    persist.save_sopf(p, m)
    loaded = persist.load_sopf(p)
    np.testing.assert_array_equal(loaded.vectors, m.vectors)
    np.testing.assert_array_equal(loaded.training_cost, m.training_cost)
    np.testing.assert_array_equal(loaded.ordered_samples, m.ordered_samples)
    assert loaded.classes == m.classes


def test_bayes_roundtrip(tmp_path):
    m = train_bayes(np.random.default_rng(0).normal(size=(10, 2)), ["A"] * 5 + ["B"] * 5)
    p = tmp_path / "m.json"
    persist.save_bayes(p, m)
    loaded = persist.load_bayes(p)
    np.testing.assert_array_equal(loaded.means, m.means)
    np.testing.assert_array_equal(loaded.variances, m.variances)
    np.testing.assert_array_equal(loaded.priors, m.priors)


def test_rbm_roundtrip(tmp_path):
    m = train_rbm(
        np.random.default_rng(0).poisson(5.0, (8, 6)).astype(float), 0.5, RbmHyper(epochs=2)
    )
    p = tmp_path / "m.json"
    persist.save_rbm(p, m)
    loaded = persist.load_rbm(p)
    np.testing.assert_array_equal(loaded.weights, m.weights)
    assert loaded.hyper == m.hyper
    assert loaded.ratio == 0.5


def test_newer_schema_rejected(tmp_path):
    p = tmp_path / "d.json"
    p.write_text(json.dumps({"version": persist.SCHEMA_VERSION + 1, "kind": "dictionary"}))
    with pytest.raises(ArtifactError, match="newer"):
        persist.load_dictionary(p)


def test_wrong_kind_rejected(tmp_path):
    d = Dictionary(words=np.zeros((2, 2)), method="kmeans")
    p = tmp_path / "d.json"
    persist.save_dictionary(p, d)
    with pytest.raises(ArtifactError, match="kind"):
        persist.load_histograms(p)


def test_not_json_rejected(tmp_path):
    p = tmp_path / "d.json"
    p.write_text("not json {")
    with pytest.raises(ArtifactError, match="JSON"):
        persist.load_dictionary(p)


def test_missing_version_rejected(tmp_path):
    p = tmp_path / "d.json"
    p.write_text(json.dumps({"kind": "dictionary"}))
    with pytest.raises(ArtifactError, match="version"):
        persist.load_dictionary(p)


def test_descriptor_csv_roundtrip(tmp_path):
    rows = [
        ("s1", "HC", 0, [1.5, -2.25]),
        ("s1", "HC", 1, [0.1, 0.2]),
        ("s2", "PD", 0, [3.0, 4.0]),
    ]
    p = tmp_path / "d.csv"
    persist.save_descriptor_csv(p, rows)
    dim, loaded = persist.load_descriptor_csv(p)
    assert dim == 2
    assert [(r[0], r[1], r[2]) for r in loaded] == [(s, l, w) for s, l, w, _ in rows]
    for got, (_, _, _, vec) in zip(loaded, rows):
        np.testing.assert_array_equal(got[3], vec)


def test_descriptor_csv_exact_floats(tmp_path):
    vec = [1.0 / 3.0, np.nextafter(0.1, 1.0)]
    p = tmp_path / "d.csv"
    persist.save_descriptor_csv(p, [("s", "NA", 0, vec)])
    _, loaded = persist.load_descriptor_csv(p)
    assert loaded[0][3][0] == vec[0]
    assert loaded[0][3][1] == vec[1]


def test_descriptor_csv_bad_header(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("subject,label\n")
    with pytest.raises(ArtifactError, match="dim"):
        persist.load_descriptor_csv(p)


def test_descriptor_csv_ragged_row(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("dim=2\nsubject,label,window,c0,c1\ns,NA,0,1.0\n")
    with pytest.raises(ArtifactError, match="row 1"):
        persist.load_descriptor_csv(p)
