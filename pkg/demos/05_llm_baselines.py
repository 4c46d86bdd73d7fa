"""Chat-LLM integrations: the two augmentation prompts and the list-ranking baseline.

Everything here runs against deterministic stand-ins for the remote model
(a canned-response stub plus a cassette recorder), so the demo is offline
and reproducible; swap in HttpChatClient with a real endpoint to go live.
"""

import tempfile
from pathlib import Path

from foodlink.gpt_rank import build_rank_prompt, evaluate_llm_ranker, parse_ranking
from foodlink.llm_augment import (
    AugPromptSpec,
    CassetteChatClient,
    StaticChatClient,
    expand_semantics,
    render_aug_prompt,
    rephrase,
)
from foodlink.synthetic import OverlapOracleChatClient, overlap_answer_selection

# --- the two augmentation prompts -------------------------------------------

QUERY = "nestle 100 grand milk choc caramel bar caramel 1.5oz"
p1 = render_aug_prompt(AugPromptSpec(kind="p1_expand", d=3), QUERY)
p2 = render_aug_prompt(AugPromptSpec(kind="p2_rephrase"), QUERY)
print("prompt 1:", p1)
print("prompt 2:", p2)

stub = StaticChatClient({
    p1: "sweet, chocolate, candy",
    p2: "A 1.5oz Nestle 100 Grand bar of milk chocolate with caramel.",
})
print("expansion:", [e.label for e in expand_semantics(QUERY, 3, stub)])
print("rephrased:", rephrase(QUERY, stub))
print()

# --- list-ranking baseline ----------------------------------------------------

docs = ["salsa, red, commercially-prepared", "cookie-crisp", "sugar, white, granulated or lump"]
prompt = build_rank_prompt("domino white sugar granulated 1lb", docs)
print(prompt.rendered)
print("parsed permutation:", parse_ranking("3, 1, 2", k=3).order)
print()

# rank a sampled question set with a deterministic oracle, recording every
# response to a cassette; the replay run needs no client at all
ds = overlap_answer_selection(n_questions=25, R=9, seed=3)
with tempfile.TemporaryDirectory() as tmp:
    cassette = Path(tmp) / "rankings.jsonl"
    recorder = CassetteChatClient(cassette, inner=OverlapOracleChatClient(), model_name="oracle")
    report, log = evaluate_llm_ranker(ds, recorder, sample_size=25, seed=3)
    print(f"recorded run: MAP={report.map:.3f} P@1={report.p_at_1:.3f} failures={report.failures}")

    replay = CassetteChatClient(cassette, inner=None, model_name="oracle")
    replayed, _ = evaluate_llm_ranker(ds, replay, sample_size=25, seed=3)
    assert (replayed.map, replayed.p_at_1) == (report.map, report.p_at_1)
    print("cassette replay reproduces the metrics exactly")
