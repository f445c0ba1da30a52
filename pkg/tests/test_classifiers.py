from __future__ import annotations

import random

import pytest

from esdkit.classifiers import (
    BaselineModel,
    ClassifierVerdict,
    accuracy,
    featurize,
    fnv1a_64,
    predict,
    serialize_input,
    split_serialized_input,
    train_baseline,
    verdict_from_score,
)
from esdkit.errors import DegenerateLabelsError


class TestSerialization:
    def test_relevance_shape(self):
        assert serialize_input("baking a cake", ["mix"]) == "baking a cake </s> mix"

    def test_temporal_shape(self):
        assert (
            serialize_input("baking a cake", ["mix", "bake"])
            == "baking a cake </s> mix </s> bake"
        )

    def test_round_trip(self):
        scenario, events = split_serialized_input("a b </s> x y </s> z")
        assert scenario == "a b"
        assert events == ["x y", "z"]


class TestFeaturize:
    def test_empty_input(self):
        assert featurize("") == {}

    def test_deterministic(self):
        text = "baking a cake </s> preheat the oven"
        assert featurize(text) == featurize(text)

    def test_field_and_bigram_sensitivity(self):
        # same bag of words, different field contents and bigrams
        assert featurize("a b </s> a b") != featurize("a b </s> b a")

    def test_hand_enumerated_features(self):
        # "x y </s> z" tags: field 0 unigrams x, y and bigram x_y; field 1
        # unigram z. Exactly these four features, each once.
        dim = 1 << 20
        expected_tags = ["0:x", "0:y", "0:x_y", "1:z"]
        expected = {}
        for tag in expected_tags:
            bucket = fnv1a_64(tag) % dim
            expected[bucket] = expected.get(bucket, 0.0) + 1.0
        assert featurize("x y </s> z", dim) == expected

    def test_counts_accumulate(self):
        vector = featurize("go go go")
        assert sorted(vector.values()) == [2.0, 3.0]  # 3x "go", 2x "go_go"

    def test_case_folded(self):
        assert featurize("Mix The Batter") == featurize("mix the batter")


def keyword_set(n: int, seed: int = 0) -> list[tuple[str, int]]:
    rng = random.Random(seed)
    filler = ["the", "a", "of", "with", "on", "mix", "go", "put"]
    examples = []
    for i in range(n):
        label = i % 2
        words = rng.choices(filler, k=4) + (["yes"] if label else ["no"])
        rng.shuffle(words)
        examples.append((" ".join(words), label))
    return examples


class TestTrainBaseline:
    def test_separable_training_accuracy(self):
        examples = keyword_set(200, seed=1)
        model = train_baseline(examples, "relevance", epochs=5, seed=1)
        assert accuracy(model, examples) == 1.0

    def test_bit_identical_for_same_seed(self):
        examples = keyword_set(100, seed=2)
        a = train_baseline(examples, "relevance", epochs=3, seed=9)
        b = train_baseline(examples, "relevance", epochs=3, seed=9)
        assert a.weights == b.weights
        assert a.bias == b.bias

    def test_label_flip_symmetry(self):
        # complementing every label negates the model (exactly in real
        # arithmetic, to rounding in floats), so every prediction flips
        examples = keyword_set(100, seed=3)
        flipped = [(text, 1 - label) for text, label in examples]
        model = train_baseline(examples, "relevance", epochs=3, seed=4)
        anti = train_baseline(flipped, "relevance", epochs=3, seed=4)
        assert anti.bias == pytest.approx(-model.bias, abs=1e-9)
        for bucket, weight in model.weights.items():
            assert anti.weights[bucket] == pytest.approx(-weight, abs=1e-9)
        for text, _ in examples:
            assert model.predict("relevance", [text])[0].label != anti.predict(
                "relevance", [text]
            )[0].label

    def test_degenerate_labels(self):
        with pytest.raises(DegenerateLabelsError):
            train_baseline([("x", 1), ("y", 1)], "relevance")
        with pytest.raises(DegenerateLabelsError):
            train_baseline([], "relevance")

    def test_validation_accuracy_reported(self):
        train = keyword_set(200, seed=5)
        valid = keyword_set(60, seed=6)
        model = train_baseline(train, "relevance", epochs=5, seed=5, validation=valid)
        assert model.validation_accuracy == 1.0


class TestPredict:
    def test_zero_weight_model_scores_half(self):
        model = BaselineModel(task="relevance", dim=64, bias=0.0, weights={})
        verdicts = model.predict("relevance", ["anything at all", "else"])
        assert all(v.score == 0.5 for v in verdicts)
        assert all(v.label == 1 for v in verdicts)  # threshold is >=

    def test_batch_order_and_shape(self):
        examples = keyword_set(100, seed=7)
        model = train_baseline(examples, "relevance", epochs=3, seed=7)
        inputs = [text for text, _ in examples[:10]]
        verdicts = predict(model, "relevance", inputs)
        assert len(verdicts) == 10
        singles = [model.predict("relevance", [t])[0] for t in inputs]
        assert verdicts == singles

    def test_repeated_calls_agree(self):
        examples = keyword_set(80, seed=8)
        model = train_baseline(examples, "relevance", epochs=2, seed=8)
        inputs = [text for text, _ in examples[:5]]
        assert model.predict("relevance", inputs) == model.predict("relevance", inputs)

    def test_task_mismatch(self):
        model = BaselineModel(task="relevance", dim=64, bias=0.0, weights={})
        with pytest.raises(ValueError):
            model.predict("temporal", ["x"])

    def test_label_flips_exactly_at_threshold(self):
        assert verdict_from_score(0.5).label == 1
        assert verdict_from_score(0.4999999999).label == 0
        assert verdict_from_score(0.5, threshold=0.6).label == 0

    def test_verdict_validation(self):
        with pytest.raises(ValueError):
            ClassifierVerdict(label=2, score=0.5)
        with pytest.raises(ValueError):
            ClassifierVerdict(label=1, score=1.5)


class TestModelIO:
    def test_round_trip_predictions_bit_exact(self, tmp_path):
        examples = keyword_set(150, seed=9)
        model = train_baseline(examples, "relevance", epochs=4, seed=9,
                               validation=keyword_set(40, seed=10))
        path = tmp_path / "model.json"
        model.save(path)
        loaded = BaselineModel.load(path)
        assert loaded.task == model.task
        assert loaded.dim == model.dim
        assert loaded.validation_accuracy == model.validation_accuracy
        inputs = [text for text, _ in examples[:25]]
        assert loaded.predict("relevance", inputs) == model.predict("relevance", inputs)

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(ValueError):
            BaselineModel.load(path)
