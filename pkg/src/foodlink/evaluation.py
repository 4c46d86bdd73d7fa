"""Ranking, answer selection, and the P@1 / AP / MAP metrics.

Each question has exactly one relevant answer among its candidates, so
average precision reduces to the reciprocal rank of the correct answer
(normalizing by the number of relevant items, i.e. one). MAP is the mean of
per-question AP, and it can never fall below P@1 under this definition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .qadataset import ExtendedDataset
from .scorer import AugmentationPlan, ScoredCandidate, ScorerModelHandle, score_batch


@dataclass(frozen=True)
class RankedList:
    question_id: str
    candidates: tuple[ScoredCandidate, ...]
    relevant_answer_id: str

    def __post_init__(self):
        scores = [c.score for c in self.candidates]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("candidate scores must be non-increasing")
        hits = sum(1 for c in self.candidates if c.answer_id == self.relevant_answer_id)
        if hits != 1:
            raise ValueError(
                f"relevant answer {self.relevant_answer_id!r} appears {hits} times in candidates"
            )

    def rank_of_correct(self) -> int:
        for i, c in enumerate(self.candidates, start=1):
            if c.answer_id == self.relevant_answer_id:
                return i
        raise AssertionError("unreachable: relevant answer validated at construction")


@dataclass(frozen=True)
class EvalReport:
    map: float
    p_at_1: float
    per_question: tuple[dict, ...]
    failures: int = 0


def rank_candidates(
    scores: list[ScoredCandidate], relevant: str, question_id: str = ""
) -> RankedList:
    """Stable descending sort: ties keep the original candidate order."""
    if not any(c.answer_id == relevant for c in scores):
        raise ValueError(f"relevant answer {relevant!r} not among scored candidates")
    ordered = sorted(scores, key=lambda c: -c.score)
    return RankedList(question_id=question_id, candidates=tuple(ordered), relevant_answer_id=relevant)


def select_answer(rl: RankedList) -> str:
    """Argmax selection: the top-ranked candidate's answer id."""
    if not rl.candidates:
        raise ValueError("empty ranked list")
    return rl.candidates[0].answer_id


def precision_at_1(lists: list[RankedList]) -> float:
    if not lists:
        raise ValueError("no ranked lists")
    hits = sum(1 for rl in lists if rl.candidates[0].answer_id == rl.relevant_answer_id)
    return hits / len(lists)


def average_precision(rl: RankedList) -> float:
    """With a single relevant item at rank r, AP = 1/r."""
    return 1.0 / rl.rank_of_correct()


def mean_average_precision(lists: list[RankedList]) -> float:
    if not lists:
        raise ValueError("no ranked lists")
    return sum(average_precision(rl) for rl in lists) / len(lists)


def build_report(lists: list[RankedList], failures: int = 0) -> EvalReport:
    per_question = tuple(
        {
            "question_id": rl.question_id,
            "ap": average_precision(rl),
            "rank_of_correct": rl.rank_of_correct(),
        }
        for rl in lists
    )
    return EvalReport(
        map=mean_average_precision(lists),
        p_at_1=precision_at_1(lists),
        per_question=per_question,
        failures=failures,
    )


def save_report(report: EvalReport, path: str | Path, fingerprint: dict | None = None) -> None:
    payload = {
        "map": report.map,
        "p_at_1": report.p_at_1,
        "failures": report.failures,
        "per_question": list(report.per_question),
        "fingerprint": fingerprint or {},
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")


# ---------------------------------------------------------------------------
# scoring a dataset with a trained model
# ---------------------------------------------------------------------------

def rank_dataset(
    model: ScorerModelHandle,
    ds: ExtendedDataset,
    plan: AugmentationPlan | None = None,
) -> list[RankedList]:
    """Score every pair (rendered through the plan), rank per question."""
    plan = plan or AugmentationPlan()
    lists = []
    for question in ds.questions:
        group = ds.pairs_for(question.id)
        rendered = [
            plan.render_pair(question.text, ds.answer(p.answer_id).text) for p in group
        ]
        scores = score_batch(model, rendered)
        candidates = [
            ScoredCandidate(p.answer_id, float(s)) for p, s in zip(group, scores)
        ]
        relevant = next(p.answer_id for p in group if p.label)
        ordered = sorted(candidates, key=lambda c: -c.score)
        lists.append(
            RankedList(
                question_id=question.id,
                candidates=tuple(ordered),
                relevant_answer_id=relevant,
            )
        )
    return lists


def evaluate_scorer(
    model: ScorerModelHandle,
    ds: ExtendedDataset,
    plan: AugmentationPlan | None = None,
) -> EvalReport:
    return build_report(rank_dataset(model, ds, plan))
