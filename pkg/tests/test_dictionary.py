import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opf_forge.dictionary import (
    Dictionary,
    LayerSchedule,
    dict_dopf,
    dict_flat_opf,
    dict_hopf,
    quantize,
    resolve_schedule,
    train_deep_forest,
)
from oracles import nearest_word_counts


def blob_descriptors(seed=0, n_per=50, centers=((0, 0), (8, 0), (0, 8), (8, 8))):
    rng = np.random.default_rng(seed)
    return np.concatenate([rng.normal(c, 0.6, (n_per, 2)) for c in centers])


class TestResolveSchedule:
    def test_one_percent_of_large_layer(self):
        s = LayerSchedule(n_layers=2, layer1_kmax=100, fractions=(0.01,))
        assert resolve_schedule(s, [5682]) == 57

    def test_floor_and_cap_small(self):
        s = LayerSchedule(n_layers=2, layer1_kmax=10, fractions=(0.1,))
        assert resolve_schedule(s, [2]) == 1

    def test_cap_full_fraction(self):
        s = LayerSchedule(n_layers=2, layer1_kmax=10, fractions=(1.0,))
        assert resolve_schedule(s, [50]) == 49

    def test_collapsed_layer_terminates(self):
        s = LayerSchedule(n_layers=2, layer1_kmax=10, fractions=(0.5,))
        with pytest.raises(ValueError, match="terminates"):
            resolve_schedule(s, [1])

    def test_validation(self):
        with pytest.raises(ValueError):
            LayerSchedule(n_layers=2, layer1_kmax=5, fractions=())
        with pytest.raises(ValueError):
            LayerSchedule(n_layers=2, layer1_kmax=5, fractions=(0.0,))


class TestDeepForest:
    def test_layer_chain_and_subset(self):
        data = blob_descriptors(n_per=50)
        df = train_deep_forest(data, LayerSchedule(n_layers=2, layer1_kmax=10, fractions=(0.5,)))
        sizes = df.layer_sizes
        assert sizes == sorted(sizes, reverse=True)
        layer1 = {tuple(v) for v in df.layers[0].vectors}
        layer2 = {tuple(v) for v in df.layers[1].vectors}
        assert layer2 <= layer1

    def test_chain_over_random_seeds(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            data = rng.normal(size=(60, 3))
            df = train_deep_forest(
                data, LayerSchedule(n_layers=3, layer1_kmax=8, fractions=(0.5, 0.5))
            )
            sizes = df.layer_sizes
            assert sizes == sorted(sizes, reverse=True)
            prev = {tuple(v) for v in df.layers[0].vectors}
            for layer in df.layers[1:]:
                cur = {tuple(v) for v in layer.vectors}
                assert cur <= prev
                prev = cur

    def test_too_few_descriptors(self):
        with pytest.raises(ValueError):
            train_deep_forest(np.zeros((1, 4)), LayerSchedule(1, 1, ()))

    def test_early_stop_on_single_prototype(self):
        # two coincident groups collapse quickly; remaining layers are skipped
        data = np.concatenate([np.zeros((5, 2)), np.ones((5, 2))])
        df = train_deep_forest(data, LayerSchedule(n_layers=4, layer1_kmax=3, fractions=(0.9, 0.9, 0.9)))
        assert df.n_layers <= 4
        if df.layer_sizes[-1] == 1:
            assert all(s > 1 for s in df.layer_sizes[:-1])


class TestDictionaries:
    def _df(self):
        return train_deep_forest(
            blob_descriptors(), LayerSchedule(n_layers=2, layer1_kmax=10, fractions=(0.5,))
        )

    def test_dopf_is_last_layer(self):
        df = self._df()
        d = dict_dopf(df)
        np.testing.assert_array_equal(d.words, df.layers[-1].vectors)
        assert d.method == "dOPF"
        assert np.all(d.provenance == 0)

    def test_hopf_size_identity(self):
        df = self._df()
        d = dict_hopf(df)
        assert d.size == sum(df.layer_sizes)
        for i, layer in enumerate(df.layers):
            sel = d.provenance == i + 1
            assert int(sel.sum()) == layer.vectors.shape[0]
            np.testing.assert_array_equal(d.words[sel], layer.vectors)

    def test_dopf_subset_of_hopf(self):
        df = self._df()
        dopf_words = {tuple(w) for w in dict_dopf(df).words}
        hopf = dict_hopf(df)
        hopf_words = {tuple(w) for w in hopf.words}
        assert dopf_words <= hopf_words
        last = hopf.provenance == df.n_layers
        np.testing.assert_array_equal(hopf.words[last], dict_dopf(df).words)

    def test_single_layer_hopf_equals_dopf(self):
        df = train_deep_forest(blob_descriptors(), LayerSchedule(n_layers=1, layer1_kmax=10, fractions=()))
        np.testing.assert_array_equal(dict_hopf(df).words, dict_dopf(df).words)

    def test_flat_opf(self):
        data = blob_descriptors()
        d = dict_flat_opf(data, 10)
        assert d.method == "OPF"
        assert {tuple(w) for w in d.words} <= {tuple(p) for p in data}


class TestQuantize:
    def test_single_word(self):
        d = Dictionary(words=np.array([[0.0, 0.0]]), method="kmeans")
        h = quantize(np.random.default_rng(0).normal(size=(7, 2)), d)
        assert h.counts.tolist() == [7]

    def test_two_words_1d(self):
        d = Dictionary(words=np.array([[0.0], [10.0]]), method="kmeans")
        h = quantize(np.array([[1.0], [2.0], [9.0]]), d)
        assert h.counts.tolist() == [2, 1]

    def test_tie_goes_to_lowest_index(self):
        d = Dictionary(words=np.array([[0.0], [2.0]]), method="kmeans")
        h = quantize(np.array([[1.0]]), d)
        assert h.counts.tolist() == [1, 0]

    def test_dimension_mismatch(self):
        d = Dictionary(words=np.zeros((3, 4)), method="kmeans")
        with pytest.raises(ValueError, match="dimension"):
            quantize(np.zeros((2, 5)), d)

    def test_empty_rejected(self):
        d = Dictionary(words=np.zeros((3, 4)), method="kmeans")
        with pytest.raises(ValueError):
            quantize(np.zeros((0, 4)), d)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(5)
        words = rng.normal(size=(6, 3))
        data = rng.normal(size=(40, 3))
        h = quantize(data, Dictionary(words=words, method="kmeans"))
        assert h.counts.tolist() == nearest_word_counts(data.tolist(), words.tolist())

    @given(
        st.integers(min_value=1, max_value=200),
        st.integers(min_value=1, max_value=20),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_mass_conservation(self, n_desc, n_words, seed):
        rng = np.random.default_rng(seed)
        d = Dictionary(words=rng.normal(size=(n_words, 2)), method="kmeans")
        h = quantize(rng.normal(size=(n_desc, 2)), d)
        assert int(h.counts.sum()) == n_desc
        assert np.all(h.counts >= 0)
