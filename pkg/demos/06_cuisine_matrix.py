"""Cuisine prediction: featurizer x classifier comparison on one shared split.

Recipes become space-joined ingredient strings, featurized with TF-IDF or a
sentence embedder, and every classifier family is scored with weighted F1 on
the same stratified test set.
"""

from foodlink.cuisine import ClassifierSpec, FeatureSpec, format_table, run_matrix
from foodlink.synthetic import separable_recipes

recipes = separable_recipes(n_recipes=300, n_cuisines=3, seed=11)
print(f"{len(recipes)} recipes across 3 cuisines, e.g.:")
for r in recipes[:3]:
    print(f"  {r.cuisine}: {', '.join(r.ingredients)}")
print()

report = run_matrix(
    recipes,
    features=[FeatureSpec("tfidf"), FeatureSpec("embedding")],
    classifiers=[
        ClassifierSpec(kind, seed=11)
        for kind in ("logistic_regression", "svm", "decision_tree", "random_forest", "mlp")
    ],
    test_fraction=0.2,
    seed=11,
)

print(format_table(report))
print("shared test-split fingerprint:", report.split_fingerprint[:16], "...")
