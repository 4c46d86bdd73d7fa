"""Fine-tuning the cross-encoder scorer, with and without knowledge infusion.

Uses a constructed dataset where the discriminative token lives only in
ontology entity labels: raw-text training has nothing to latch onto, while
the ontology plan appends the shared label to both sides of each true pair.
Also runs the embedding-kNN baseline for comparison.
"""

from foodlink.evaluation import evaluate_scorer
from foodlink.qadataset import split_dataset
from foodlink.scorer import AugmentationPlan, HashedEmbedder, fine_tune, knn_match, new_model
from foodlink.synthetic import ontology_gated_answer_selection, overlap_answer_selection

SEED = 0

# --- knowledge-infused fine-tuning ------------------------------------------

ds, ontology = ontology_gated_answer_selection(n_questions=80, R=9, seed=SEED)
train, test = split_dataset(ds, train_fraction=0.2, seed=SEED)
print(f"{len(train.questions)} training questions, {len(test.questions)} held out\n")

for kind in ("none", "ontology"):
    plan = AugmentationPlan(kind=kind, n=1, ontology=ontology if kind == "ontology" else None)
    model = fine_tune(new_model(seed=SEED), train, augmentation=plan, epochs=10, seed=SEED)
    report = evaluate_scorer(model, test, plan)
    print(f"plan={kind:8s}  MAP={report.map:.3f}  P@1={report.p_at_1:.3f}")

print("\nThe raw-text run is stuck near chance (1/10 candidates); the entity-")
print("augmented run can match the appended labels across the pair.\n")

# --- kNN baseline on a lexical-overlap dataset -------------------------------

overlap = overlap_answer_selection(n_questions=40, R=9, seed=SEED)
embedder = HashedEmbedder()
hits = 0
for q in overlap.questions:
    correct = overlap.positive_for(q.id).answer_id
    candidates = [overlap.answer(p.answer_id) for p in overlap.pairs_for(q.id)]
    hits += knn_match(q.text, candidates, embedder) == correct
print(f"embedding-kNN picks the overlapping answer for {hits}/{len(overlap.questions)} questions")
