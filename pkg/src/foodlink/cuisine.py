"""Cuisine prediction from ingredient lists: featurizer x classifier matrix.

Recipes are rendered to space-joined ingredient strings, featurized either
with TF-IDF (idf(t) = ln((1+N)/(1+df(t))) + 1, raw term counts, no row
normalization) or with a sentence embedder, then evaluated across five
classifier families on one shared stratified split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score
from sklearn.neural_network import MLPClassifier
from sklearn.svm import LinearSVC
from sklearn.tree import DecisionTreeClassifier

from .scorer import HashedEmbedder
from .textutil import derive_rng, sha256_hex, stable_hash64, tokenize

FEATURE_KINDS = ("tfidf", "embedding")
CLASSIFIER_KINDS = ("logistic_regression", "svm", "decision_tree", "random_forest", "mlp")


@dataclass(frozen=True)
class Recipe:
    id: str
    cuisine: str
    ingredients: tuple[str, ...]

    def __post_init__(self):
        if not self.ingredients:
            raise ValueError(f"recipe {self.id!r} has no ingredients")


@dataclass(frozen=True)
class FeatureSpec:
    kind: str
    embedder: object | None = None

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "embedding" and self.embedder is None:
            object.__setattr__(self, "embedder", HashedEmbedder())


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CLASSIFIER_KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if isinstance(self.hyperparameters, dict):
            object.__setattr__(self, "hyperparameters", tuple(sorted(self.hyperparameters.items())))


@dataclass
class CuisineReport:
    rows: list[dict] = field(default_factory=list)
    split_fingerprint: str = ""


def recipe_to_text(r: Recipe) -> str:
    """Space-join the ingredient strings, preserving order."""
    return " ".join(r.ingredients)


def load_recipes(path: str | Path) -> list[Recipe]:
    """Read the Kaggle-format JSON array of {id, cuisine, ingredients[]}."""
    data = json.loads(Path(path).read_text("utf-8"))
    return [
        Recipe(str(rec["id"]), rec["cuisine"], tuple(rec["ingredients"]))
        for rec in data
    ]


# ---------------------------------------------------------------------------
# featurization
# ---------------------------------------------------------------------------

class TfidfFeaturizer:
    """Count x idf features over the training vocabulary.

    idf(t) = ln((1+N)/(1+df(t))) + 1. Terms unseen at fit time have no column
    and therefore contribute zero at transform time.
    """

    def __init__(self):
        self.vocab: dict[str, int] = {}
        self.idf: np.ndarray | None = None

    def fit(self, texts: list[str]) -> "TfidfFeaturizer":
        docs = [tokenize(t) for t in texts]
        terms = sorted({tok for doc in docs for tok in doc})
        self.vocab = {t: i for i, t in enumerate(terms)}
        df = np.zeros(len(terms))
        for doc in docs:
            for tok in set(doc):
                df[self.vocab[tok]] += 1
        n = len(docs)
        self.idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
        return self

    def transform(self, texts: list[str]) -> np.ndarray:
        if self.idf is None:
            raise ValueError("featurizer not fitted")
        out = np.zeros((len(texts), len(self.vocab)))
        for i, text in enumerate(texts):
            for tok in tokenize(text):
                j = self.vocab.get(tok)
                if j is not None:
                    out[i, j] += 1.0
        return out * self.idf

    def fit_transform(self, texts: list[str]) -> np.ndarray:
        return self.fit(texts).transform(texts)


def featurize(recipes: list[Recipe], spec: FeatureSpec) -> np.ndarray:
    """Feature matrix with one row per recipe."""
    if not recipes:
        raise ValueError("no recipes to featurize")
    texts = [recipe_to_text(r) for r in recipes]
    if spec.kind == "tfidf":
        return TfidfFeaturizer().fit_transform(texts)
    return np.vstack([spec.embedder.embed(t) for t in texts])


# ---------------------------------------------------------------------------
# classifiers and evaluation
# ---------------------------------------------------------------------------

def build_classifier(spec: ClassifierSpec):
    params = dict(spec.hyperparameters)
    if spec.kind == "logistic_regression":
        return LogisticRegression(max_iter=1000, random_state=spec.seed, **params)
    if spec.kind == "svm":
        return LinearSVC(max_iter=5000, random_state=spec.seed, **params)
    if spec.kind == "decision_tree":
        return DecisionTreeClassifier(random_state=spec.seed, **params)
    if spec.kind == "random_forest":
        return RandomForestClassifier(n_estimators=100, random_state=spec.seed, **params)
    return MLPClassifier(hidden_layer_sizes=(64,), max_iter=500, random_state=spec.seed, **params)


def stratified_split(labels: list[str], test_fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic per-class split; every class keeps at least one train row."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0,1), got {test_fraction}")
    by_class: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(by_class):
        members = by_class[label]
        rng = derive_rng(seed, stable_hash64(label))
        order = rng.permutation(len(members))
        n_test = min(round(test_fraction * len(members)), len(members) - 1)
        test_idx.extend(members[i] for i in order[:n_test])
        train_idx.extend(members[i] for i in order[n_test:])
    return sorted(train_idx), sorted(test_idx)


def split_fingerprint(recipes: list[Recipe], test_idx: list[int]) -> str:
    return sha256_hex(",".join(recipes[i].id for i in sorted(test_idx)))


def train_and_eval(
    recipes: list[Recipe],
    feature: FeatureSpec,
    clf: ClassifierSpec,
    test_fraction: float = 0.2,
    seed: int = 0,
    split: tuple[list[int], list[int]] | None = None,
) -> dict:
    """Weighted-average F1 of one featurizer/classifier pair on a held-out split."""
    labels = [r.cuisine for r in recipes]
    if len(set(labels)) < 2:
        raise ValueError("need at least two cuisine classes")
    train_idx, test_idx = split if split is not None else stratified_split(labels, test_fraction, seed)

    train_texts = [recipe_to_text(recipes[i]) for i in train_idx]
    test_texts = [recipe_to_text(recipes[i]) for i in test_idx]
    if feature.kind == "tfidf":
        featurizer = TfidfFeaturizer().fit(train_texts)
        x_train = featurizer.transform(train_texts)
        x_test = featurizer.transform(test_texts)
    else:
        x_train = np.vstack([feature.embedder.embed(t) for t in train_texts])
        x_test = np.vstack([feature.embedder.embed(t) for t in test_texts])
    y_train = [labels[i] for i in train_idx]
    y_test = [labels[i] for i in test_idx]

    model = build_classifier(clf)
    model.fit(x_train, y_train)
    predictions = model.predict(x_test)
    f1 = float(f1_score(y_test, predictions, average="weighted", zero_division=0))
    return {
        "f1": f1,
        "model": model,
        "split_fingerprint": split_fingerprint(recipes, test_idx),
    }


def run_matrix(
    recipes: list[Recipe],
    features: list[FeatureSpec],
    classifiers: list[ClassifierSpec],
    test_fraction: float = 0.2,
    seed: int = 0,
) -> CuisineReport:
    """Evaluate every (feature, classifier) pair on one shared split."""
    if not features or not classifiers:
        raise ValueError("need at least one feature spec and one classifier spec")
    labels = [r.cuisine for r in recipes]
    split = stratified_split(labels, test_fraction, seed)
    fingerprint = split_fingerprint(recipes, split[1])
    report = CuisineReport(split_fingerprint=fingerprint)
    for feature in features:
        for clf in classifiers:
            row = {"feature_kind": feature.kind, "classifier_kind": clf.kind}
            try:
                result = train_and_eval(
                    recipes, feature, clf, test_fraction=test_fraction, seed=seed, split=split
                )
                assert result["split_fingerprint"] == fingerprint
                row["f1"] = result["f1"]
            except Exception as exc:  # recorded, not fatal: one bad cell should not kill the matrix
                row["error"] = str(exc)
            report.rows.append(row)
    return report


def save_report(report: CuisineReport, json_path: str | Path, table_path: str | Path | None = None) -> None:
    payload = {"split_fingerprint": report.split_fingerprint, "rows": report.rows}
    Path(json_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
    if table_path is not None:
        Path(table_path).write_text(format_table(report), "utf-8")


def format_table(report: CuisineReport) -> str:
    """Plain-text matrix: feature rows, classifier columns."""
    features = []
    classifiers = []
    cells: dict[tuple[str, str], str] = {}
    for row in report.rows:
        f, c = row["feature_kind"], row["classifier_kind"]
        if f not in features:
            features.append(f)
        if c not in classifiers:
            classifiers.append(c)
        cells[(f, c)] = f"{row['f1'] * 100:.2f}%" if "f1" in row else "error"
    width = max([len("feature")] + [len(f) for f in features]) + 2
    col_widths = [max(len(c), 7) + 2 for c in classifiers]
    lines = ["feature".ljust(width) + "".join(c.ljust(w) for c, w in zip(classifiers, col_widths))]
    for f in features:
        cells_text = "".join(cells.get((f, c), "-").ljust(w) for c, w in zip(classifiers, col_widths))
        lines.append(f.ljust(width) + cells_text)
    return "\n".join(lines) + "\n"
