import itertools

import numpy as np
import pytest

from foodlink.evaluation import mean_average_precision, precision_at_1
from foodlink.gpt_rank import (
    RETRY_CLARIFICATION,
    RankingParseError,
    build_rank_prompt,
    evaluate_llm_ranker,
    parse_rank_prompt,
    parse_ranking,
    ranking_to_ranked_list,
)
from foodlink.synthetic import overlap_answer_selection

REFERENCE_DOCS = [
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
REFERENCE_QUERY = "domino white sugar granulated 1lb"
REFERENCE_RESPONSE = "9, 1, 10, 2, 6, 4, 7, 8, 5, 3"


class TestBuildRankPrompt:
    def test_template_sections_and_numbered_docs(self):
        prompt = build_rank_prompt(REFERENCE_QUERY, REFERENCE_DOCS)
        lines = prompt.rendered.splitlines()
        assert lines[0] == "Given:"
        assert lines[1] == "Query: domino white sugar granulated 1lb"
        assert lines[2] == ""
        assert lines[3] == "Documents:"
        assert lines[4] == "1: salsa, red, commercially-prepared"
        assert lines[5] == "2: cookie-crisp"
        assert lines[13] == "10: sugar, white, granulated or lump"
        assert lines[14] == ""
        assert lines[15] == "Task:"
        assert lines[16] == (
            "Rank the documents in order of relevance to the given query (no explanation required)."
        )

    def test_single_doc(self):
        prompt = build_rank_prompt("q", ["only doc"])
        assert "1: only doc" in prompt.rendered.splitlines()
        assert prompt.documents == ((1, "only doc"),)

    def test_document_order_fidelity(self):
        docs = ["first", "second", "third"]
        base = build_rank_prompt("q", docs)
        permuted = build_rank_prompt("q", docs[::-1])
        assert [d for _, d in base.documents] == docs
        assert [d for _, d in permuted.documents] == docs[::-1]

    def test_empty_docs_rejected(self):
        with pytest.raises(ValueError, match="document"):
            build_rank_prompt("q", [])

    def test_render_parse_roundtrip(self):
        prompt = build_rank_prompt(REFERENCE_QUERY, REFERENCE_DOCS)
        query, docs = parse_rank_prompt(prompt.rendered)
        assert query == REFERENCE_QUERY
        assert docs == list(prompt.documents)

    def test_render_parse_roundtrip_fuzz(self):
        rng = np.random.Generator(np.random.PCG64(44))
        pieces = ["salsa, red", "10: decoy", "Task:", "Given:", "plain words",
                  "trailing space ", " leading", "commas,,everywhere", "1lb 1.5oz"]
        for _ in range(200):
            k = int(rng.integers(1, 12))
            docs = [" ".join(pieces[i] for i in rng.choice(len(pieces), size=2)) for _ in range(k)]
            query = pieces[int(rng.integers(len(pieces)))]
            prompt = build_rank_prompt(query, docs)
            parsed_query, parsed_docs = parse_rank_prompt(prompt.rendered)
            assert parsed_query == query
            assert parsed_docs == list(prompt.documents)

    def test_newline_in_document_rejected(self):
        with pytest.raises(ValueError, match="single-line"):
            build_rank_prompt("q", ["line one\nline two"])


class TestParseRanking:
    def test_reference_sample_output(self):
        assert parse_ranking(REFERENCE_RESPONSE, 10).order == (9, 1, 10, 2, 6, 4, 7, 8, 5, 3)

    def test_k_one(self):
        assert parse_ranking("1", 1).order == (1,)

    def test_duplicate_rejected(self):
        with pytest.raises(RankingParseError, match="duplicate"):
            parse_ranking("1, 1, 2", 3)

    def test_out_of_range_rejected(self):
        with pytest.raises(RankingParseError, match="outside"):
            parse_ranking("1, 2, 4", 3)

    def test_wrong_length_rejected(self):
        with pytest.raises(RankingParseError, match="expected 3"):
            parse_ranking("1, 2", 3)
        with pytest.raises(RankingParseError, match="expected 3"):
            parse_ranking("1, 2, 3, 1", 3)

    def test_non_integer_rejected(self):
        with pytest.raises(RankingParseError, match="non-integer"):
            parse_ranking("first, second", 2)

    def test_whitespace_and_newline_tolerance(self):
        assert parse_ranking("3\n1  2", 3).order == (3, 1, 2)

    def test_parse_of_rendered_permutation_roundtrips(self):
        for perm in itertools.permutations(range(1, 5)):
            rendered = ", ".join(str(p) for p in perm)
            assert parse_ranking(rendered, 4).order == perm


from foodlink.synthetic import OverlapOracleChatClient as _OracleRanker


class _GarbageRanker:
    model_name = "garbage"

    def __init__(self):
        self.prompts = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        return "no ranking here"


class TestEvaluateLlmRanker:
    def test_overlap_oracle_gets_perfect_p_at_1(self):
        ds = overlap_answer_selection(n_questions=30, R=9, seed=17)
        report, log = evaluate_llm_ranker(ds, _OracleRanker(), sample_size=30, seed=17)
        assert report.p_at_1 == 1.0
        assert report.map == 1.0
        assert report.failures == 0
        assert all(entry["status"] == "ok" for entry in log)

    def test_reversed_oracle_puts_relevant_last(self):
        ds = overlap_answer_selection(n_questions=20, R=9, seed=18)
        report, _ = evaluate_llm_ranker(ds, _OracleRanker(reverse=True), sample_size=20, seed=18)
        assert report.p_at_1 == 0.0
        assert report.map == pytest.approx(1 / 10)

    def test_parse_failures_are_recorded_and_excluded(self):
        ds = overlap_answer_selection(n_questions=6, R=4, seed=19)
        client = _GarbageRanker()
        with pytest.raises(RuntimeError, match="every sampled question failed"):
            evaluate_llm_ranker(ds, client, sample_size=6, seed=19)
        # each question got the retry with the clarification line appended
        assert len(client.prompts) == 12
        assert client.prompts[1].endswith(RETRY_CLARIFICATION)

    def test_partial_failures_reported(self):
        ds = overlap_answer_selection(n_questions=8, R=4, seed=20)
        oracle = _OracleRanker()

        class Flaky:
            model_name = "flaky"

            def __init__(self):
                self.count = 0

            def complete(self, prompt):
                self.count += 1
                if self.count <= 2:  # first question fails twice (initial + retry)
                    return "nope"
                return oracle.complete(prompt)

        report, log = evaluate_llm_ranker(ds, Flaky(), sample_size=8, seed=20)
        assert report.failures == 1
        assert sum(1 for e in log if e["status"] == "failed") == 1
        assert len(report.per_question) == 7

    def test_metrics_agree_with_evaluation_module(self):
        rng = np.random.Generator(np.random.PCG64(9))
        lists = []
        for qi in range(40):
            k = 10
            ids = [f"q{qi}som{j}" for j in range(k)]
            perm = tuple(int(v) for v in rng.permutation(k) + 1)
            relevant = ids[int(rng.integers(k))]
            from foodlink.gpt_rank import ParsedRanking

            lists.append(ranking_to_ranked_list(f"q{qi}", ids, ParsedRanking(perm), relevant))
        # brute force both metrics
        ranks = []
        for rl in lists:
            for rank, cand in enumerate(rl.candidates, start=1):
                if cand.answer_id == rl.relevant_answer_id:
                    ranks.append(rank)
        assert precision_at_1(lists) == pytest.approx(sum(r == 1 for r in ranks) / len(ranks))
        assert mean_average_precision(lists) == pytest.approx(sum(1 / r for r in ranks) / len(ranks))
