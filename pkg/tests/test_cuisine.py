import json
import math

import numpy as np
import pytest

from foodlink.cuisine import (
    ClassifierSpec,
    FeatureSpec,
    Recipe,
    TfidfFeaturizer,
    featurize,
    format_table,
    load_recipes,
    recipe_to_text,
    run_matrix,
    save_report,
    stratified_split,
    train_and_eval,
)
from foodlink.synthetic import separable_recipes


class TestRecipeToText:
    def test_join(self):
        assert recipe_to_text(Recipe("r", "c", ("salt", "olive oil"))) == "salt olive oil"

    def test_single_ingredient(self):
        assert recipe_to_text(Recipe("r", "c", ("basil",))) == "basil"

    def test_order_preserved(self):
        a = recipe_to_text(Recipe("r", "c", ("salt", "pepper")))
        b = recipe_to_text(Recipe("r", "c", ("pepper", "salt")))
        assert a != b

    def test_empty_ingredients_rejected(self):
        with pytest.raises(ValueError, match="ingredients"):
            Recipe("r", "c", ())


class TestFeaturize:
    def test_identical_recipes_identical_rows(self):
        recipes = [Recipe("a", "x", ("salt", "rice")), Recipe("b", "x", ("salt", "rice"))]
        for kind in ("tfidf", "embedding"):
            m = featurize(recipes, FeatureSpec(kind))
            assert np.array_equal(m[0], m[1])

    def test_tfidf_hand_computed_three_doc_fixture(self):
        # doc tokens: d1 = [salt, rice], d2 = [salt, pea], d3 = [salt, rice, rice]
        recipes = [
            Recipe("d1", "x", ("salt", "rice")),
            Recipe("d2", "x", ("salt", "pea")),
            Recipe("d3", "x", ("salt", "rice rice")),
        ]
        m = featurize(recipes, FeatureSpec("tfidf"))
        # vocabulary is sorted: pea, rice, salt
        idf_pea = math.log((1 + 3) / (1 + 1)) + 1
        idf_rice = math.log((1 + 3) / (1 + 2)) + 1
        idf_salt = math.log((1 + 3) / (1 + 3)) + 1
        assert m.shape == (3, 3)
        assert m[0] == pytest.approx([0.0, idf_rice, idf_salt])
        assert m[1] == pytest.approx([idf_pea, 0.0, idf_salt])
        assert m[2] == pytest.approx([0.0, 2 * idf_rice, idf_salt])
        # a term present in every document sits at the idf floor of 1
        assert idf_salt == pytest.approx(1.0)

    def test_embedding_rows_have_embedder_dimension(self):
        recipes = separable_recipes(10, seed=1)
        spec = FeatureSpec("embedding")
        m = featurize(recipes, spec)
        assert m.shape == (10, spec.embedder.dim)

    def test_empty_recipes_rejected(self):
        with pytest.raises(ValueError, match="recipes"):
            featurize([], FeatureSpec("tfidf"))

    def test_no_leakage_from_test_vocabulary(self):
        featurizer = TfidfFeaturizer().fit(["salt rice", "salt pea"])
        with_unknown = featurizer.transform(["salt quinoa zucchini"])
        without_unknown = featurizer.transform(["salt"])
        assert np.array_equal(with_unknown, without_unknown)


class TestTrainAndEval:
    def test_separable_logreg_f1(self):
        recipes = separable_recipes(150, seed=2)
        result = train_and_eval(recipes, FeatureSpec("tfidf"), ClassifierSpec("logistic_regression"),
                                test_fraction=0.2, seed=2)
        assert result["f1"] >= 0.95

    def test_shuffled_labels_near_chance(self):
        recipes = separable_recipes(300, n_cuisines=3, seed=3)
        rng = np.random.Generator(np.random.PCG64(3))
        labels = [r.cuisine for r in recipes]
        shuffled = list(rng.permutation(labels))
        scrambled = [Recipe(r.id, c, r.ingredients) for r, c in zip(recipes, shuffled)]
        result = train_and_eval(scrambled, FeatureSpec("tfidf"), ClassifierSpec("logistic_regression"),
                                test_fraction=0.2, seed=3)
        assert abs(result["f1"] - 1 / 3) < 0.15

    def test_single_class_rejected(self):
        recipes = [Recipe(f"r{i}", "only", ("salt",)) for i in range(10)]
        with pytest.raises(ValueError, match="two cuisine classes"):
            train_and_eval(recipes, FeatureSpec("tfidf"), ClassifierSpec("svm"))

    def test_deterministic_given_seed(self):
        recipes = separable_recipes(80, seed=4)
        a = train_and_eval(recipes, FeatureSpec("tfidf"), ClassifierSpec("decision_tree"), seed=4)
        b = train_and_eval(recipes, FeatureSpec("tfidf"), ClassifierSpec("decision_tree"), seed=4)
        assert a["f1"] == b["f1"]
        assert a["split_fingerprint"] == b["split_fingerprint"]

    def test_all_five_classifier_families_run(self):
        recipes = separable_recipes(60, seed=5)
        for kind in ("logistic_regression", "svm", "decision_tree", "random_forest", "mlp"):
            result = train_and_eval(recipes, FeatureSpec("tfidf"), ClassifierSpec(kind), seed=5)
            assert 0.0 <= result["f1"] <= 1.0


class TestStratifiedSplit:
    def test_every_class_in_train(self):
        labels = ["a"] * 10 + ["b"] * 3 + ["c"] * 2
        train, test = stratified_split(labels, 0.4, seed=1)
        assert {labels[i] for i in train} == {"a", "b", "c"}
        assert set(train) & set(test) == set()
        assert sorted(train + test) == list(range(15))

    def test_fraction_bounds(self):
        with pytest.raises(ValueError, match="test_fraction"):
            stratified_split(["a", "b"], 1.2, seed=0)


class TestRunMatrix:
    def test_two_by_five_matrix(self):
        recipes = separable_recipes(100, seed=6)
        features = [FeatureSpec("tfidf"), FeatureSpec("embedding")]
        classifiers = [ClassifierSpec(k, seed=6) for k in
                       ("logistic_regression", "svm", "decision_tree", "random_forest", "mlp")]
        report = run_matrix(recipes, features, classifiers, seed=6)
        assert len(report.rows) == 10
        assert all("f1" in row for row in report.rows)
        assert report.split_fingerprint

    def test_rerun_identical(self):
        recipes = separable_recipes(60, seed=7)
        features = [FeatureSpec("tfidf")]
        classifiers = [ClassifierSpec("logistic_regression", seed=7), ClassifierSpec("decision_tree", seed=7)]
        a = run_matrix(recipes, features, classifiers, seed=7)
        b = run_matrix(recipes, features, classifiers, seed=7)
        assert a.rows == b.rows
        assert a.split_fingerprint == b.split_fingerprint

    def test_empty_specs_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            run_matrix(separable_recipes(10, seed=1), [], [ClassifierSpec("svm")])

    def test_table_layout_mirrors_features_by_classifiers(self):
        recipes = separable_recipes(60, seed=8)
        report = run_matrix(
            recipes,
            [FeatureSpec("tfidf"), FeatureSpec("embedding")],
            [ClassifierSpec("logistic_regression", seed=8), ClassifierSpec("svm", seed=8)],
            seed=8,
        )
        table = format_table(report)
        lines = table.splitlines()
        assert lines[0].split() == ["feature", "logistic_regression", "svm"]
        assert lines[1].startswith("tfidf")
        assert lines[2].startswith("embedding")


class TestRecipeIO:
    def test_kaggle_format(self, tmp_path):
        path = tmp_path / "recipes.json"
        path.write_text(json.dumps([
            {"id": 10259, "cuisine": "greek", "ingredients": ["feta", "olives"]},
            {"id": 25693, "cuisine": "southern_us", "ingredients": ["flour", "pepper"]},
        ]))
        recipes = load_recipes(path)
        assert recipes[0].id == "10259"
        assert recipes[0].cuisine == "greek"
        assert recipes[1].ingredients == ("flour", "pepper")

    def test_save_report(self, tmp_path):
        report = run_matrix(separable_recipes(40, seed=9), [FeatureSpec("tfidf")],
                            [ClassifierSpec("logistic_regression", seed=9)], seed=9)
        json_path = tmp_path / "report.json"
        table_path = tmp_path / "table.txt"
        save_report(report, json_path, table_path)
        payload = json.loads(json_path.read_text())
        assert payload["split_fingerprint"] == report.split_fingerprint
        assert "feature" in table_path.read_text()
