"""Extended answer-selection dataset: one true pair plus R sampled negatives per question."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .textutil import derive_rng


@dataclass(frozen=True)
class Question:
    id: str
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"question {self.id!r} has empty text")


@dataclass(frozen=True)
class Answer:
    id: str
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"answer {self.id!r} has empty text")


@dataclass(frozen=True)
class QAPair:
    question_id: str
    answer_id: str
    label: bool


@dataclass
class ExtendedDataset:
    """Questions, the shared answer pool, and labeled pairs (1 positive + R negatives each)."""

    questions: list[Question]
    answer_pool: list[Answer]
    pairs: list[QAPair]
    R: int
    seed: int
    _question_by_id: dict[str, Question] = field(init=False, repr=False)
    _answer_by_id: dict[str, Answer] = field(init=False, repr=False)
    _pairs_by_question: dict[str, list[QAPair]] = field(init=False, repr=False)

    def __post_init__(self):
        self._question_by_id = {q.id: q for q in self.questions}
        self._answer_by_id = {a.id: a for a in self.answer_pool}
        if len(self._question_by_id) != len(self.questions):
            raise ValueError("duplicate question ids")
        if len(self._answer_by_id) != len(self.answer_pool):
            raise ValueError("duplicate answer ids in pool")
        self._pairs_by_question = {}
        for p in self.pairs:
            self._pairs_by_question.setdefault(p.question_id, []).append(p)

    def question(self, qid: str) -> Question:
        return self._question_by_id[qid]

    def answer(self, aid: str) -> Answer:
        return self._answer_by_id[aid]

    def pairs_for(self, qid: str) -> list[QAPair]:
        return self._pairs_by_question[qid]

    def positive_for(self, qid: str) -> QAPair:
        return next(p for p in self.pairs_for(qid) if p.label)

    def validate(self) -> None:
        """Check every dataset invariant; raises ValueError on the first violation."""
        for p in self.pairs:
            if p.question_id not in self._question_by_id:
                raise ValueError(f"pair references unknown question {p.question_id!r}")
            if p.answer_id not in self._answer_by_id:
                raise ValueError(f"pair references unknown answer {p.answer_id!r}")
        if self.R >= len(self.answer_pool):
            raise ValueError("R must be smaller than the answer pool")
        for q in self.questions:
            group = self._pairs_by_question.get(q.id, [])
            positives = [p for p in group if p.label]
            negatives = [p for p in group if not p.label]
            if len(positives) != 1:
                raise ValueError(f"question {q.id!r} has {len(positives)} positives, expected 1")
            if len(negatives) != self.R:
                raise ValueError(f"question {q.id!r} has {len(negatives)} negatives, expected {self.R}")
            neg_ids = {p.answer_id for p in negatives}
            if len(neg_ids) != len(negatives):
                raise ValueError(f"question {q.id!r} has duplicate negatives")
            if positives[0].answer_id in neg_ids:
                raise ValueError(f"question {q.id!r} repeats its positive answer as a negative")


def _question_rng(seed: int, q_index: int) -> np.random.Generator:
    # per-question derived seed so parallel construction stays deterministic
    return derive_rng(seed, q_index)


def build_extended_dataset(
    gold: list[tuple[Question, Answer]],
    pool: list[Answer],
    R: int,
    seed: int,
) -> ExtendedDataset:
    """Sample R incorrect pool answers per question, uniformly without replacement.

    Every gold answer must be present in ``pool`` and R must be smaller than
    the pool, otherwise there are not enough incorrect answers to sample.
    """
    if R < 1:
        raise ValueError("R must be positive")
    if R >= len(pool):
        raise ValueError(f"negative sample count exceeds pool: R={R}, pool={len(pool)}")
    pool_ids = {a.id for a in pool}
    pairs: list[QAPair] = []
    for q_index, (question, correct) in enumerate(gold):
        if correct.id not in pool_ids:
            raise ValueError(
                f"gold answer {correct.id!r} for question {question.id!r} missing from pool"
            )
        candidates = [a.id for a in pool if a.id != correct.id]
        rng = _question_rng(seed, q_index)
        picks = rng.choice(len(candidates), size=R, replace=False)
        for i in sorted(picks):
            pairs.append(QAPair(question.id, candidates[i], False))
        pairs.append(QAPair(question.id, correct.id, True))
    ds = ExtendedDataset(
        questions=[q for q, _ in gold],
        answer_pool=list(pool),
        pairs=pairs,
        R=R,
        seed=seed,
    )
    ds.validate()
    return ds


def split_dataset(
    ds: ExtendedDataset, train_fraction: float, seed: int
) -> tuple[ExtendedDataset, ExtendedDataset]:
    """Question-level split: all pairs of a question land on one side."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0,1), got {train_fraction}")
    rng = derive_rng(seed)
    order = rng.permutation(len(ds.questions))
    n_train = round(train_fraction * len(ds.questions))
    train_idx = set(order[:n_train].tolist())

    def subset(selected: set[int]) -> ExtendedDataset:
        qs = [q for i, q in enumerate(ds.questions) if i in selected]
        qids = {q.id for q in qs}
        return ExtendedDataset(
            questions=qs,
            answer_pool=list(ds.answer_pool),
            pairs=[p for p in ds.pairs if p.question_id in qids],
            R=ds.R,
            seed=ds.seed,
        )

    train = subset(train_idx)
    test = subset(set(range(len(ds.questions))) - train_idx)
    return train, test


# ---------------------------------------------------------------------------
# file I/O: tab-delimited gold/pool inputs, line-delimited dataset output
# ---------------------------------------------------------------------------

def load_gold_pairs(path: str | Path) -> list[tuple[Question, Answer]]:
    """Read gold (question, correct answer) rows from a TSV with a header of
    question_id, question_text, answer_id, answer_text."""
    rows = _read_tsv(path, ["question_id", "question_text", "answer_id", "answer_text"])
    return [
        (Question(r["question_id"], r["question_text"]), Answer(r["answer_id"], r["answer_text"]))
        for r in rows
    ]


def load_answer_pool(path: str | Path) -> list[Answer]:
    rows = _read_tsv(path, ["answer_id", "answer_text"])
    return [Answer(r["answer_id"], r["answer_text"]) for r in rows]


def _read_tsv(path: str | Path, expected: list[str]) -> list[dict[str, str]]:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split("\t")
    if header != expected:
        raise ValueError(f"{path}: expected columns {expected}, got {header}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != len(expected):
            raise ValueError(f"{path}:{lineno}: expected {len(expected)} columns")
        out.append(dict(zip(expected, cells)))
    return out


def save_dataset(ds: ExtendedDataset, path: str | Path) -> None:
    """Write the dataset as a line-delimited file: a # header recording R and
    seed, a column header, then one row per pair."""
    lines = [
        "# " + json.dumps({"R": ds.R, "seed": ds.seed}, sort_keys=True),
        "question_id\tquestion_text\tanswer_id\tanswer_text\tlabel",
    ]
    for p in ds.pairs:
        q = ds.question(p.question_id)
        a = ds.answer(p.answer_id)
        for cell in (q.id, q.text, a.id, a.text):
            if "\t" in cell or "\n" in cell:
                raise ValueError(f"field contains tab/newline, not writable as TSV: {cell!r}")
        lines.append(f"{q.id}\t{q.text}\t{a.id}\t{a.text}\t{p.label}")
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def load_dataset(path: str | Path) -> ExtendedDataset:
    lines = Path(path).read_text("utf-8").splitlines()
    if len(lines) < 2 or not lines[0].startswith("# "):
        raise ValueError(f"{path}: missing dataset header")
    meta = json.loads(lines[0][2:])
    questions: dict[str, Question] = {}
    answers: dict[str, Answer] = {}
    pairs: list[QAPair] = []
    for line in lines[2:]:
        if not line.strip():
            continue
        qid, qtext, aid, atext, label = line.split("\t")
        questions.setdefault(qid, Question(qid, qtext))
        answers.setdefault(aid, Answer(aid, atext))
        pairs.append(QAPair(qid, aid, label == "True"))
    return ExtendedDataset(
        questions=list(questions.values()),
        answer_pool=list(answers.values()),
        pairs=pairs,
        R=int(meta["R"]),
        seed=int(meta["seed"]),
    )
