"""LLM list-ranking baseline: prompt a chat model with a query and numbered
candidate documents, parse the returned permutation, and score it with the
standard ranking metrics."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .evaluation import EvalReport, RankedList, build_report
from .llm_augment import ChatClient, ChatTransportError
from .qadataset import ExtendedDataset
from .scorer import ScoredCandidate
from .textutil import derive_rng

RANK_INSTRUCTION = (
    "Rank the documents in order of relevance to the given query (no explanation required)."
)
RETRY_CLARIFICATION = "Answer with numbers only."


@dataclass(frozen=True)
class RankPrompt:
    query: str
    documents: tuple[tuple[int, str], ...]
    rendered: str


@dataclass(frozen=True)
class ParsedRanking:
    order: tuple[int, ...]


class RankingParseError(ValueError):
    """The response is not a permutation of 1..k; message names the defect."""


def build_rank_prompt(query: str, docs: list[str]) -> RankPrompt:
    """Render the Given / Query / Documents / Task prompt for k candidates."""
    if not docs:
        raise ValueError("at least one document is required")
    for doc in docs:
        if "\n" in doc:
            raise ValueError("documents must be single-line strings")
    numbered = tuple((i, doc) for i, doc in enumerate(docs, start=1))
    lines = ["Given:", f"Query: {query}", "", "Documents:"]
    lines.extend(f"{i}: {doc}" for i, doc in numbered)
    lines.extend(["", "Task:", RANK_INSTRUCTION])
    return RankPrompt(query=query, documents=numbered, rendered="\n".join(lines) + "\n")


def parse_rank_prompt(rendered: str) -> tuple[str, list[tuple[int, str]]]:
    """Recover (query, numbered documents) from a rendered prompt."""
    lines = rendered.splitlines()
    if not lines or lines[0] != "Given:" or not lines[1].startswith("Query: "):
        raise ValueError("not a rank prompt")
    query = lines[1][len("Query: "):]
    try:
        doc_start = lines.index("Documents:") + 1
    except ValueError as exc:
        raise ValueError("missing Documents section") from exc
    docs = []
    for line in lines[doc_start:]:
        if not line:
            break
        index, _, text = line.partition(": ")
        docs.append((int(index), text))
    return query, docs


def parse_ranking(response: str, k: int) -> ParsedRanking:
    """Parse a comma/whitespace-separated permutation of 1..k."""
    if k < 1:
        raise ValueError("k must be positive")
    tokens = [t for t in re.split(r"[,\s]+", response.strip()) if t]
    if not tokens:
        raise RankingParseError("empty response")
    values = []
    for tok in tokens:
        if not re.fullmatch(r"[+-]?\d+", tok):
            raise RankingParseError(f"non-integer token {tok!r}")
        values.append(int(tok))
    if len(values) != k:
        raise RankingParseError(f"expected {k} values, got {len(values)}")
    seen = set()
    for v in values:
        if not 1 <= v <= k:
            raise RankingParseError(f"value {v} outside 1..{k}")
        if v in seen:
            raise RankingParseError(f"duplicate value {v}")
        seen.add(v)
    return ParsedRanking(order=tuple(values))


def ranking_to_ranked_list(
    question_id: str,
    candidate_ids: list[str],
    ranking: ParsedRanking,
    relevant: str,
) -> RankedList:
    """Turn a parsed permutation over prompt positions into a RankedList.

    ``candidate_ids[i]`` is the answer shown as document i+1; synthetic
    descending scores encode the parsed order.
    """
    k = len(candidate_ids)
    candidates = tuple(
        ScoredCandidate(candidate_ids[doc_index - 1], (k - pos) / k)
        for pos, doc_index in enumerate(ranking.order)
    )
    return RankedList(question_id=question_id, candidates=candidates, relevant_answer_id=relevant)


def evaluate_llm_ranker(
    ds: ExtendedDataset,
    client: ChatClient,
    sample_size: int = 100,
    seed: int = 0,
) -> tuple[EvalReport, list[dict]]:
    """Prompt-rank a seeded sample of questions and aggregate the metrics.

    Candidates are shuffled per question before prompting so the true answer
    holds no fixed position. A question whose response fails to parse gets one
    retry with a clarification line; still-failing questions are excluded from
    the metrics but counted in the report. Returns (report, per-question log).
    """
    rng = derive_rng(seed)
    n = min(sample_size, len(ds.questions))
    chosen = rng.choice(len(ds.questions), size=n, replace=False)

    lists: list[RankedList] = []
    log: list[dict] = []
    failures = 0
    for qi in sorted(chosen.tolist()):
        question = ds.questions[qi]
        group = ds.pairs_for(question.id)
        order = derive_rng(seed, qi).permutation(len(group))
        shuffled = [group[i] for i in order]
        candidate_ids = [p.answer_id for p in shuffled]
        docs = [ds.answer(p.answer_id).text for p in shuffled]
        relevant = next(p.answer_id for p in group if p.label)
        prompt = build_rank_prompt(question.text, docs)

        entry = {"question_id": question.id, "responses": []}
        ranking = None
        try:
            for attempt in range(2):
                text = prompt.rendered if attempt == 0 else (
                    prompt.rendered + "\n" + RETRY_CLARIFICATION
                )
                response = client.complete(text)
                entry["responses"].append(response)
                try:
                    ranking = parse_ranking(response, len(docs))
                    break
                except RankingParseError as exc:
                    entry["parse_error"] = str(exc)
        except ChatTransportError as exc:
            entry["transport_error"] = str(exc)

        if ranking is None:
            failures += 1
            entry["status"] = "failed"
        else:
            entry["status"] = "ok"
            lists.append(ranking_to_ranked_list(question.id, candidate_ids, ranking, relevant))
        log.append(entry)

    if not lists:
        raise RuntimeError("every sampled question failed; no metrics to report")
    return build_report(lists, failures=failures), log
