"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines on the terminal.
"""

import json
import random
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from foodlink.corpus import clean_articles, clean_text, corpus_stats, load_articles
from foodlink.evaluation import (
    evaluate_scorer,
    mean_average_precision,
    precision_at_1,
    average_precision,
    RankedList,
)
from foodlink.gpt_rank import RankingParseError, build_rank_prompt, parse_ranking
from foodlink.qadataset import Answer, Question, build_extended_dataset, split_dataset
from foodlink.scorer import (
    AugmentationPlan,
    HashedEmbedder,
    ScoredCandidate,
    embed,
    fine_tune,
    knn_match,
    new_model,
    render_training_pairs,
)
from foodlink.cuisine import ClassifierSpec, FeatureSpec, Recipe, run_matrix, train_and_eval
from foodlink.knowledge import augment, query_ontology
from foodlink.synthetic import (
    ontology_gated_answer_selection,
    overlap_answer_selection,
    pseudo_words,
    random_ranked_lists,
    separable_recipes,
)


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}", file=sys.stderr)
        raise
    print(f"[PASS] {name}")


def test_a1_metric_oracle_equivalence():
    with criterion("A1 metric oracle equivalence (1,000 lists, exact vs brute force)"):
        start = time.monotonic()
        lists = random_ranked_lists(1000, k=10, seed=101)
        # independent brute-force loop oracle
        hits = 0
        ap_total = 0.0
        for rl in lists:
            rank = None
            for position, cand in enumerate(rl.candidates, start=1):
                if cand.answer_id == rl.relevant_answer_id:
                    rank = position
                    break
            if rank == 1:
                hits += 1
            ap_total += 1.0 / rank
        oracle_p1 = hits / len(lists)
        oracle_map = ap_total / len(lists)
        assert abs(precision_at_1(lists) - oracle_p1) <= 1e-12
        assert abs(mean_average_precision(lists) - oracle_map) <= 1e-12
        assert time.monotonic() - start < 5.0


def test_a2_ap_closed_form_and_map_dominance():
    with criterion("A2 AP closed form 1/r and MAP >= P@1"):
        for r in range(1, 11):
            order = [f"x{i}" for i in range(10)]
            order[r - 1] = "rel"
            candidates = tuple(
                ScoredCandidate(a, (10 - i) / 10) for i, a in enumerate(order)
            )
            rl = RankedList("q", candidates, "rel")
            assert average_precision(rl) == 1.0 / r
        for seed in range(5):
            lists = random_ranked_lists(200, k=10, seed=seed)
            assert mean_average_precision(lists) >= precision_at_1(lists)


def test_a3_desk_scale_learning():
    with criterion("A3 desk-scale learning: P@1 >= 0.9 on held-out 80% within 10 epochs"):
        start = time.monotonic()
        ds = overlap_answer_selection(n_questions=200, R=9, seed=0)
        train, test = split_dataset(ds, 0.2, seed=0)
        assert len(train.questions) == 40 and len(test.questions) == 160
        model = fine_tune(new_model(seed=0), train, epochs=10, seed=0)
        report = evaluate_scorer(model, test)
        elapsed = time.monotonic() - start
        print(f"  A3 detail: P@1={report.p_at_1:.3f} MAP={report.map:.3f} elapsed={elapsed:.1f}s")
        assert report.p_at_1 >= 0.9
        assert elapsed < 600.0


def test_a4_augmentation_lift_direction():
    with criterion("A4 ontology augmentation lifts P@1 by >= 0.15 (majority of 3 seeds)"):
        wins = 0
        for seed in (0, 1, 2):
            ds, ontology = ontology_gated_answer_selection(n_questions=120, R=9, seed=seed)
            train, test = split_dataset(ds, 0.2, seed=seed)
            p_at_1 = {}
            for kind in ("none", "ontology"):
                plan = AugmentationPlan(
                    kind=kind, n=1, ontology=ontology if kind == "ontology" else None
                )
                tuned = fine_tune(new_model(seed=seed), train, augmentation=plan,
                                  epochs=10, seed=seed)
                p_at_1[kind] = evaluate_scorer(tuned, test, plan).p_at_1
            lift = p_at_1["ontology"] - p_at_1["none"]
            print(f"  A4 detail: seed={seed} none={p_at_1['none']:.3f} "
                  f"ontology={p_at_1['ontology']:.3f} lift={lift:+.3f}")
            wins += lift >= 0.15
        assert wins >= 2


def test_a5_rendering_audit(tmp_path):
    with criterion("A5 rendering audit: every dumped question ends with <= n entity labels"):
        n = 2
        ds, ontology = ontology_gated_answer_selection(n_questions=40, R=5, seed=7)
        plan = AugmentationPlan(kind="ontology", n=n, ontology=ontology)
        dump_path = tmp_path / "dump.jsonl"
        fine_tune(new_model(seed=7), ds, augmentation=plan, epochs=1, seed=7,
                  dump_path=dump_path)
        violations = 0
        rows = [json.loads(line) for line in dump_path.read_text().splitlines()]
        assert rows
        for row in rows:
            raw_q = ds.question(row["question_id"]).text
            entities = query_ontology(raw_q, n, ontology)
            assert len(entities) <= n
            expected = augment(raw_q, entities).rendered
            if row["question"] != expected:
                violations += 1
            suffix = row["question"][len(raw_q):]
            appended = [s for s in suffix.split(" ") if s]
            labels = [e.label for e in entities]
            if appended != labels:
                violations += 1
        assert violations == 0


def test_a6_prompt_fidelity():
    with criterion("A6 rank-prompt template fidelity and permutation parse"):
        docs = [
            "salsa, red, commercially-prepared",
            "cookie-crisp",
            "chips, corn based",
            "yogurt, plain",
            "bread, whole wheat",
            "cheddar cheese block",
            "frozen peas",
            "apple juice concentrate",
            "instant oatmeal packet",
            "sugar, white, granulated or lump",
        ]
        prompt = build_rank_prompt("domino white sugar granulated 1lb", docs)
        rendered = prompt.rendered
        assert "Given:\nQuery: domino white sugar granulated 1lb\n" in rendered
        assert "\n\nDocuments:\n1: salsa, red, commercially-prepared\n" in rendered
        assert "\n10: sugar, white, granulated or lump\n" in rendered
        assert rendered.endswith(
            "\n\nTask:\nRank the documents in order of relevance to the given query "
            "(no explanation required).\n"
        )
        assert parse_ranking("9, 1, 10, 2, 6, 4, 7, 8, 5, 3", 10).order == (9, 1, 10, 2, 6, 4, 7, 8, 5, 3)


ADVERSARIAL_RESPONSES = [
    # duplicates
    ("1, 1, 2", 3), ("2 2 1", 3), ("1,2,3,3", 4), ("5,5,5,5,5", 5), ("1, 2, 1, 2", 4),
    ("3, 3", 2), ("1 1", 2), ("4,4,1,2", 4), ("2,3,2", 3), ("1,1", 2),
    # out of range
    ("0, 1, 2", 3), ("1, 2, 4", 3), ("-1, 1, 2", 3), ("1, 2, 99", 3), ("11, 1, 2", 3),
    ("0", 1), ("2", 1), ("7, 8", 2), ("1, 2, -3", 3), ("1, 0", 2),
    # wrong length: short
    ("1, 2", 3), ("1", 3), ("", 3), ("   ", 2), ("3, 1", 4),
    ("1, 2, 3", 5), ("2", 4), ("1,2,3,4", 6), ("1", 2), ("9, 1", 10),
    # wrong length: long
    ("1, 2, 3, 4", 3), ("1, 2, 3", 2), ("1 2 3 4 5", 4), ("2, 1, 3", 1), ("1, 2", 1),
    ("1,2,3,4,5,6", 5), ("3,1,2,4", 2), ("1 2 3", 1), ("2 1 4 3", 3), ("1, 3, 2, 4, 5", 4),
    # non-numeric
    ("one, two, three", 3), ("first", 1), ("1, two, 3", 3), ("a b c", 3), ("1; 2; 3 ok", 3),
    ("rank: most relevant", 2), ("1st, 2nd", 2), ("doc1, doc2", 2), ("yes", 1), ("1.5, 2", 2),
]


def test_a7_parser_rejection():
    with criterion("A7 parser rejects all 50 adversarial responses"):
        assert len(ADVERSARIAL_RESPONSES) == 50
        rejected = 0
        for response, k in ADVERSARIAL_RESPONSES:
            try:
                parse_ranking(response, k)
            except RankingParseError:
                rejected += 1
        assert rejected == 50


def test_a8_dataset_invariants():
    with criterion("A8 dataset invariants over 500 builds + negative uniformity within 3 sigma"):
        rng = random.Random(23)
        pool_master = [Answer(f"a{i}", f"text {i}") for i in range(30)]
        for build in range(500):
            d = rng.randint(4, 30)
            pool = pool_master[:d]
            r = rng.randint(1, d - 1)
            n_q = rng.randint(1, 6)
            gold = [(Question(f"q{j}", f"question {j}"), pool[rng.randrange(d)]) for j in range(n_q)]
            seed = rng.randint(0, 10_000)
            ds = build_extended_dataset(gold, pool, R=r, seed=seed)
            ds.validate()  # exactly one positive, R negatives, no dupes, no positive-as-negative
            again = build_extended_dataset(gold, pool, R=r, seed=seed)
            assert again.pairs == ds.pairs
        # uniformity: one question, pool of 6, R=2 -> 5 incorrect candidates
        pool = pool_master[:6]
        gold = [(Question("q0", "question zero"), pool[0])]
        counts = {a.id: 0 for a in pool[1:]}
        n_builds = 5000
        for seed in range(n_builds):
            ds = build_extended_dataset(gold, pool, R=2, seed=seed)
            for p in ds.pairs_for("q0"):
                if not p.label:
                    counts[p.answer_id] += 1
        draws = n_builds * 2
        assert draws >= 10_000
        p = 2 / 5
        sigma = (n_builds * p * (1 - p)) ** 0.5
        for aid, count in counts.items():
            assert abs(count - n_builds * p) <= 3 * sigma, (aid, count)


def test_a9_knn_sanity():
    with criterion("A9 kNN verbatim-match 100/100 and scaling invariance"):
        embedder = HashedEmbedder(dim=64)
        words = pseudo_words(400, seed=31)
        rng = np.random.Generator(np.random.PCG64(31))
        hits = 0
        for case in range(100):
            pool_texts = set()
            while len(pool_texts) < 12:
                k = int(rng.integers(3, 6))
                pool_texts.add(" ".join(words[i] for i in rng.choice(len(words), size=k, replace=False)))
            pool = [Answer(f"a{i}", t) for i, t in enumerate(sorted(pool_texts))]
            target = pool[int(rng.integers(len(pool)))]
            hits += knn_match(target.text, pool, embedder) == target.id
        assert hits == 100

        class Scaled:
            def __init__(self, factor):
                self.dim = embedder.dim
                self.factor = factor

            def embed(self, text):
                return self.factor * embedder.embed(text)

        pool = [Answer(f"a{i}", " ".join(words[3 * i : 3 * i + 3])) for i in range(10)]
        for factor in (0.001, 7.3, 4096.0):
            scaled = Scaled(factor)
            for q_index in range(10):
                q = pool[q_index].text + " " + words[50 + q_index]
                assert knn_match(q, pool, scaled) == knn_match(q, pool, embedder)


def test_a10_cuisine_harness():
    with criterion("A10 cuisine harness: separable F1, permutation null, 2x5 matrix"):
        start = time.monotonic()
        recipes = separable_recipes(500, n_cuisines=3, seed=41)
        result = train_and_eval(recipes, FeatureSpec("tfidf"),
                                ClassifierSpec("logistic_regression", seed=41),
                                test_fraction=0.2, seed=41)
        print(f"  A10 detail: separable tfidf+logreg F1={result['f1']:.3f}")
        assert result["f1"] >= 0.95

        rng = np.random.Generator(np.random.PCG64(41))
        labels = [r.cuisine for r in recipes]
        shuffled = list(rng.permutation(labels))
        scrambled = [Recipe(r.id, c, r.ingredients) for r, c in zip(recipes, shuffled)]
        null = train_and_eval(scrambled, FeatureSpec("tfidf"),
                              ClassifierSpec("logistic_regression", seed=41),
                              test_fraction=0.2, seed=41)
        print(f"  A10 detail: permutation-null F1={null['f1']:.3f}")
        assert abs(null["f1"] - 1 / 3) <= 0.1

        features = [FeatureSpec("tfidf"), FeatureSpec("embedding")]
        classifiers = [ClassifierSpec(k, seed=41) for k in
                       ("logistic_regression", "svm", "decision_tree", "random_forest", "mlp")]
        report = run_matrix(recipes, features, classifiers, test_fraction=0.2, seed=41)
        assert len(report.rows) == 10
        assert all("f1" in row for row in report.rows)
        assert report.split_fingerprint
        elapsed = time.monotonic() - start
        print(f"  A10 detail: matrix elapsed={elapsed:.1f}s")
        assert elapsed < 120.0


FUZZ_FRAGMENTS = [
    "plain words", "REFERENCES", "references:", "Bibliography", "http://a.b/c?d=1",
    "https://x.example.org/long/path", "www.site.org", "user@mail.org", "naïve café über",
    "tab\ttab", "\n", "  ", "1.5oz 144oz", "mixed http://q.r tail", "ref@erences.com",
    "émigré", "□◆◇", "a@b", "@", "www.", "http://", "REFERENCES extra words",
]


def test_a11_corpus_pipeline(data_dir):
    with criterion("A11 clean_text idempotence over 10,000 fuzzed strings + stats oracle"):
        rng = random.Random(51)
        violations = 0
        for _ in range(10_000):
            raw = "".join(
                rng.choice(FUZZ_FRAGMENTS) + rng.choice(["", " ", "\n", ""])
                for _ in range(rng.randint(0, 7))
            )
            once = clean_text(raw)
            if clean_text(once) != once:
                violations += 1
        assert violations == 0

        articles = clean_articles(load_articles(data_dir / "mini_corpus.jsonl"))
        stats = corpus_stats(articles)
        expected = json.loads((data_dir / "mini_corpus_stats.json").read_text())
        assert stats.article_count == expected["article_count"]
        assert stats.token_count == expected["token_count"]
        assert stats.vocab_size == expected["vocab_size"]
        assert stats.byte_size == expected["byte_size"]
