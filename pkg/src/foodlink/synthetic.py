"""Synthetic data generators for desk-scale experiments and demos.

Real product/taxonomy data is proprietary, so the experiments here run on
constructed datasets whose ground truth is known by design: lexical-overlap
answer selection, ontology-gated answer selection (the discriminative token
lives only in entity labels), separable recipe sets, and random ranked lists.
"""

from __future__ import annotations

import numpy as np

from .cuisine import Recipe
from .evaluation import RankedList
from .knowledge import Ontology, OntologyClass
from .qadataset import Answer, ExtendedDataset, Question, build_extended_dataset
from .scorer import ScoredCandidate
from .textutil import derive_rng

_CONSONANTS = "bcdfgklmnprstvz"
_VOWELS = "aeiou"


def pseudo_words(count: int, seed: int, syllables: int = 3) -> list[str]:
    """Deterministic pronounceable pseudo-words, all distinct."""
    rng = derive_rng(seed, 11)
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < count:
        word = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(syllables)
        )
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def overlap_answer_selection(
    n_questions: int = 200,
    pool_extra: int = 60,
    R: int = 9,
    seed: int = 0,
) -> ExtendedDataset:
    """Answer selection where truth is lexical overlap.

    Each answer carries two signature words unique to it plus filler drawn
    from an answers-only vocabulary. Its question repeats the two signatures
    plus filler from a questions-only vocabulary, so the positive shares
    exactly two content words with the question and every other answer shares
    zero. Signature words of held-out questions never occur in training.
    """
    rng = derive_rng(seed, 12)
    n_answers = n_questions + pool_extra
    signatures = pseudo_words(2 * n_answers, seed=seed)
    answer_filler = pseudo_words(40, seed=seed + 1)
    question_filler = pseudo_words(40, seed=seed + 2)

    pool: list[Answer] = []
    for i in range(n_answers):
        sig = signatures[2 * i : 2 * i + 2]
        filler = [answer_filler[j] for j in rng.choice(len(answer_filler), size=rng.integers(1, 4), replace=False)]
        words = list(sig) + filler
        rng.shuffle(words)
        pool.append(Answer(f"a{i:04d}", " ".join(words)))

    gold: list[tuple[Question, Answer]] = []
    for i in range(n_questions):
        sig = signatures[2 * i : 2 * i + 2]
        filler = [question_filler[j] for j in rng.choice(len(question_filler), size=rng.integers(2, 5), replace=False)]
        words = list(sig) + filler
        rng.shuffle(words)
        gold.append((Question(f"q{i:04d}", " ".join(words)), pool[i]))

    ds = build_extended_dataset(gold, pool, R=R, seed=seed)
    _check_overlap_contract(ds)
    return ds


def _content_words(text: str) -> set[str]:
    return set(text.split())


def _check_overlap_contract(ds: ExtendedDataset) -> None:
    for q in ds.questions:
        qw = _content_words(q.text)
        for p in ds.pairs_for(q.id):
            shared = len(qw & _content_words(ds.answer(p.answer_id).text))
            if p.label and shared < 2:
                raise AssertionError(f"positive for {q.id} shares {shared} words")
            if not p.label and shared > 1:
                raise AssertionError(f"negative for {q.id} shares {shared} words")


def ontology_gated_answer_selection(
    n_questions: int = 120,
    pool_extra: int = 40,
    R: int = 9,
    seed: int = 0,
) -> tuple[ExtendedDataset, Ontology]:
    """Answer selection solvable only through ontology augmentation.

    Question i contains a query-side trigger word; its positive answer
    contains a different answer-side trigger. The two triggers are synonyms
    of the same ontology class, so with entity augmentation both sides gain
    the same label token; without it, question and positive share nothing.
    """
    rng = derive_rng(seed, 13)
    n_answers = n_questions + pool_extra
    q_triggers = pseudo_words(n_answers, seed=seed + 10)
    a_triggers = pseudo_words(n_answers, seed=seed + 11)
    labels = pseudo_words(n_answers, seed=seed + 12, syllables=4)
    answer_filler = pseudo_words(40, seed=seed + 13)
    question_filler = pseudo_words(40, seed=seed + 14)

    classes = [
        OntologyClass(uri=f"fix:{i:04d}", label=labels[i], synonyms=(q_triggers[i], a_triggers[i]))
        for i in range(n_answers)
    ]
    ontology = Ontology(classes)

    pool: list[Answer] = []
    for i in range(n_answers):
        filler = [answer_filler[j] for j in rng.choice(len(answer_filler), size=2, replace=False)]
        words = [a_triggers[i]] + filler
        rng.shuffle(words)
        pool.append(Answer(f"a{i:04d}", " ".join(words)))

    gold: list[tuple[Question, Answer]] = []
    for i in range(n_questions):
        filler = [question_filler[j] for j in rng.choice(len(question_filler), size=2, replace=False)]
        words = [q_triggers[i]] + filler
        rng.shuffle(words)
        gold.append((Question(f"q{i:04d}", " ".join(words)), pool[i]))

    return build_extended_dataset(gold, pool, R=R, seed=seed), ontology


def random_ranked_lists(count: int, k: int = 10, seed: int = 0) -> list[RankedList]:
    """Random score vectors, one relevant answer placed uniformly per list."""
    rng = derive_rng(seed, 14)
    lists = []
    for i in range(count):
        scores = np.sort(rng.random(k))[::-1]
        relevant_pos = int(rng.integers(k))
        candidates = tuple(
            ScoredCandidate(f"q{i}_a{j}", float(s)) for j, s in enumerate(scores)
        )
        lists.append(
            RankedList(
                question_id=f"q{i}",
                candidates=candidates,
                relevant_answer_id=f"q{i}_a{relevant_pos}",
            )
        )
    return lists


class OverlapOracleChatClient:
    """Chat stub that answers rank prompts by lexical-overlap order.

    Stands in for a remote LLM in demos and tests: parses the rendered
    prompt, sorts document indices by shared-word count with the query
    (reversed puts the best match last), and replies with the permutation.
    """

    def __init__(self, reverse: bool = False, model_name: str = "overlap-oracle"):
        self.reverse = reverse
        self.model_name = model_name

    def complete(self, prompt: str) -> str:
        from .gpt_rank import parse_rank_prompt

        query, docs = parse_rank_prompt(prompt)
        qw = set(query.split())
        by_index = dict(docs)
        order = sorted(
            by_index,
            key=lambda i: len(qw & set(by_index[i].split())),
            reverse=not self.reverse,
        )
        return ", ".join(str(i) for i in order)


def separable_recipes(
    n_recipes: int = 500,
    n_cuisines: int = 3,
    seed: int = 0,
) -> list[Recipe]:
    """Linearly separable recipes: each cuisine has its own ingredient bank."""
    rng = derive_rng(seed, 15)
    cuisines = [f"cuisine_{c}" for c in range(n_cuisines)]
    banks = {
        c: pseudo_words(12, seed=seed + 20 + i) for i, c in enumerate(cuisines)
    }
    shared = pseudo_words(6, seed=seed + 19)
    recipes = []
    for i in range(n_recipes):
        cuisine = cuisines[i % n_cuisines]
        bank = banks[cuisine]
        own = [bank[j] for j in rng.choice(len(bank), size=4, replace=False)]
        extra = [shared[j] for j in rng.choice(len(shared), size=2, replace=False)]
        recipes.append(Recipe(f"r{i:04d}", cuisine, tuple(own + extra)))
    return recipes
