"""Classifier training, inference consistency, metrics, persistence."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gridcf.datagen import Dataset
from gridcf.learn import (DegenerateDataError, FeatureScaler, Metrics,
                          evaluate, load_model, logit, predict_proba,
                          save_model, train_ffnn, train_tree)


def toy_dataset(n=200, seed=0, d=3):
    """Linearly separable on feature 0."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 10, size=(n, d))
    y = (X[:, 0] <= 5).astype(int)
    return Dataset(profiles=X, labels=y, case_id="toy", seed=seed)


class TestScaler:
    def test_round_trip_identity(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-5, 20, size=(50, 4))
        X[:, 2] = 7.0  # degenerate column
        sc = FeatureScaler.fit(X)
        assert np.allclose(sc.inverse(sc.transform(X)), X, atol=1e-9)

    def test_range(self):
        X = np.array([[0.0, 10.0], [5.0, 20.0]])
        sc = FeatureScaler.fit(X)
        Z = sc.transform(X)
        assert Z.min() == pytest.approx(0) and Z.max() == pytest.approx(1)


class TestTree:
    def test_single_split_separable(self):
        ds = toy_dataset()
        tree = train_tree(ds)
        m = evaluate(tree, ds)
        assert m.accuracy == 1.0
        assert tree.depth() == 1

    def test_depth_cap(self, small_data):
        _, split = small_data
        tree = train_tree(split.train)
        assert tree.depth() <= 4

    def test_degenerate_data(self):
        ds = toy_dataset()
        ones = Dataset(profiles=ds.profiles[ds.labels == 1],
                       labels=ds.labels[ds.labels == 1], case_id="t", seed=0)
        with pytest.raises(DegenerateDataError):
            train_tree(ones)

    def test_logit_clipping(self):
        ds = toy_dataset()
        tree = train_tree(ds)
        # pure leaves: p clipped to 1 - 1e-6
        x_feas = np.zeros(3)  # feature 0 = 0 -> feasible side
        assert logit(tree, x_feas) == pytest.approx(math.log((1 - 1e-6) / 1e-6))

    def test_leaf_half_probability_zero_logit(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0]])
        y = np.array([0, 1])
        ds = Dataset(profiles=X, labels=y, case_id="t", seed=0)
        tree = train_tree(ds, class_weights=(1.0, 1.0))
        # feature 1 separates; force a no-split tree by max_depth=0
        stump = train_tree(ds, max_depth=0, class_weights=(1.0, 1.0))
        assert predict_proba(stump, [0.0, 0.5]) == pytest.approx(0.5)
        assert logit(stump, [0.0, 0.5]) == pytest.approx(0.0)
        assert evaluate(tree, ds).accuracy == 1.0


class TestFfnn:
    def test_learns_separable_toy(self):
        ds = toy_dataset(n=300)
        model = train_ffnn(ds, epochs=60, seed=1)
        assert evaluate(model, ds).accuracy >= 0.97

    def test_deterministic_weights(self):
        ds = toy_dataset(n=100)
        a = train_ffnn(ds, epochs=5, seed=9)
        b = train_ffnn(ds, epochs=5, seed=9)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)
        c = train_ffnn(ds, epochs=5, seed=10)
        assert any(not np.array_equal(wa, wc) for wa, wc in zip(a.weights, c.weights))

    def test_architecture(self):
        ds = toy_dataset(n=60, d=7)
        model = train_ffnn(ds, epochs=2, seed=0)
        shapes = [w.shape for w in model.weights]
        assert shapes == [(7, 20), (20, 20), (20, 20), (20, 20), (20, 2)]

    def test_degenerate_data(self):
        ds = toy_dataset()
        zeros = Dataset(profiles=ds.profiles[ds.labels == 0],
                        labels=ds.labels[ds.labels == 0], case_id="t", seed=0)
        with pytest.raises(DegenerateDataError):
            train_ffnn(zeros, epochs=1)


class TestInferenceConsistency:
    def test_sigmoid_of_logit_equals_proba(self, small_models, small_data):
        _, split = small_data
        for model in small_models.values():
            for x in split.test.profiles[:20]:
                p = predict_proba(model, x)
                z = logit(model, x)
                assert 1.0 / (1.0 + math.exp(-np.clip(z, -500, 500))) == pytest.approx(p, abs=1e-9)

    def test_presoftmax_pair_definition(self):
        """Output pair (infeasible 0.0, feasible 2.0) gives logit 2 and softmax proba."""
        ds = toy_dataset(n=60)
        model = train_ffnn(ds, epochs=1, seed=0)
        model.weights = [np.zeros_like(w) for w in model.weights]
        model.biases = [np.zeros_like(b) for b in model.biases]
        model.biases[-1] = np.array([0.0, 2.0])
        x = ds.profiles[0]
        assert logit(model, x) == pytest.approx(2.0)
        want = math.exp(2) / (math.exp(2) + 1)
        assert predict_proba(model, x) == pytest.approx(want, abs=1e-9)

    def test_probabilities_complementary(self, small_models, small_data):
        _, split = small_data
        x = split.test.profiles[0]
        for model in small_models.values():
            p = predict_proba(model, x)
            assert 0.0 <= p <= 1.0

    def test_dimension_mismatch(self, small_models):
        from gridcf.learn import DimensionMismatchError
        for model in small_models.values():
            with pytest.raises(DimensionMismatchError):
                predict_proba(model, np.zeros(7))


class _ConstantModel:
    """Always predicts feasible; for metric plumbing tests."""

    kind = "stub"

    def proba(self, X):
        return np.full(np.atleast_2d(X).shape[0], 0.9)


class TestEvaluate:
    def test_perfect_predictor(self, small_models, small_data):
        _, split = small_data

        class Oracle:
            def __init__(self, data):
                self.lookup = {tuple(x): y for x, y in zip(data.profiles, data.labels)}

            def proba(self, X):
                return np.array([0.99 if self.lookup[tuple(x)] == 1 else 0.01
                                 for x in np.atleast_2d(X)])

        m = evaluate(Oracle(split.test), split.test)
        assert m.accuracy == 1.0
        assert m.confusion[0, 1] == 0 and m.confusion[1, 0] == 0
        assert m.false_feasible_rate == 0.0

    def test_constant_feasible_predictor(self, small_data):
        _, split = small_data
        m = evaluate(_ConstantModel(), split.test)
        n_i, n_f = split.test.class_counts()
        assert m.accuracy == pytest.approx(n_f / len(split.test))
        assert m.false_feasible_rate == 1.0
        assert m.confusion.sum() == len(split.test)

    def test_class_weight_monotone_false_feasible(self, small_data):
        """Raising the infeasible weight never raises training false-feasible count."""
        _, split = small_data
        for trainer, kwargs in ((train_tree, {}), (train_ffnn, {"epochs": 30, "seed": 2})):
            counts = []
            for w in (1.0, 2.0, 4.0):
                model = trainer(split.train, class_weights=(w, 1.0), **kwargs)
                m = evaluate(model, split.train)
                counts.append(m.confusion[0, 1])
            assert counts[0] >= counts[1] >= counts[2], (trainer.__name__, counts)


class TestPersistence:
    def test_round_trip(self, tmp_path, small_models, small_data):
        _, split = small_data
        X = split.test.profiles[:10]
        for name, model in small_models.items():
            path = tmp_path / f"model.{model.kind}.json"
            save_model(model, path)
            back = load_model(path)
            assert np.allclose(back.proba(X), model.proba(X), atol=1e-12)
            assert back.metrics == model.metrics

    def test_rejects_unknown_schema(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"schema": "other"}')
        with pytest.raises(ValueError):
            load_model(p)
